//! Backend-agnostic scoring contract.
//!
//! Every probe talks to a model through [`Backend`]. Concrete backends
//! implement only the operations their family supports; the rest fall back
//! to [`BackendError::Unsupported`]. Token-level helpers shared by backend
//! implementations (span alignment, perplexity from log-probabilities,
//! next-word extraction from sub-word distributions) live here too, so the
//! scoring arithmetic is identical across backends.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::BackendError;

/// Canonical mask token used in probe inputs. Backends map it onto their own
/// tokenizer's mask token.
pub const MASK_TOKEN: &str = "[MASK]";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum Family {
    MaskedEncoder,
    Causal,
    Seq2seq,
    StaticVector,
    NgramTable,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::MaskedEncoder => "masked-encoder",
            Family::Causal => "causal",
            Family::Seq2seq => "seq2seq",
            Family::StaticVector => "static-vector",
            Family::NgramTable => "ngram-table",
        }
    }

    pub fn is_generative(self) -> bool {
        matches!(self, Family::Causal | Family::Seq2seq)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackendDescriptor {
    pub backend_id: String,
    pub family: Family,
    pub num_layers: usize,
    pub hidden_size: usize,
    /// Whether concurrent read-only calls are safe. Runners serialize calls
    /// to backends that report `false`.
    pub concurrent: bool,
}

impl BackendDescriptor {
    pub fn new(
        backend_id: &str,
        family: Family,
        num_layers: usize,
        hidden_size: usize,
    ) -> Result<Self, BackendError> {
        if num_layers == 0 || hidden_size == 0 {
            return Err(BackendError::Other(alloc::format!(
                "backend {backend_id:?}: num_layers and hidden_size must be at least 1"
            )));
        }
        if matches!(family, Family::StaticVector | Family::NgramTable) && num_layers != 1 {
            return Err(BackendError::Other(alloc::format!(
                "backend {backend_id:?}: {family} backends have exactly one layer"
            )));
        }
        Ok(Self {
            backend_id: backend_id.to_string(),
            family,
            num_layers,
            hidden_size,
            concurrent: true,
        })
    }

    pub fn unsupported(&self, operation: &'static str) -> BackendError {
        BackendError::Unsupported {
            backend_id: self.backend_id.clone(),
            family: self.family.as_str(),
            operation,
        }
    }
}

/// Half-open range of character (Unicode scalar) offsets into an input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Slices `text` by character offsets.
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        let mut indices = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(core::iter::once(text.len()));
        let start = indices.nth(self.start).unwrap_or(text.len());
        let end = if self.end > self.start {
            indices.nth(self.end - self.start - 1).unwrap_or(text.len())
        } else {
            start
        };
        &text[start..end]
    }
}

/// Contiguous token index range covering one adjective occurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Output of [`Backend::embed_tokens`]: `layers[l][t]` holds the vectors of
/// the tokens covering target `t` at layer `l + 1`.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Embeddings {
    pub layers: Vec<Vec<Vec<Vec<f64>>>>,
}

impl Embeddings {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
}

/// One scored word candidate.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Candidate {
    pub word: String,
    pub probability: f64,
}

impl Candidate {
    pub fn new(word: &str, probability: f64) -> Self {
        Self {
            word: word.to_string(),
            probability,
        }
    }
}

/// Sequence-level score. Perplexity-type scores prefer lower values,
/// frequency-type scores prefer higher values.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "kebab-case")
)]
pub enum SequenceScore {
    Perplexity {
        mean_log_prob: f64,
        perplexity: f64,
        tokens: usize,
    },
    Frequency {
        count: f64,
    },
}

impl SequenceScore {
    /// Raw score value: the perplexity, or the phrase frequency.
    pub fn value(&self) -> f64 {
        match *self {
            SequenceScore::Perplexity { perplexity, .. } => perplexity,
            SequenceScore::Frequency { count } => count,
        }
    }

    /// Larger means more plausible.
    pub fn preference(&self) -> f64 {
        match *self {
            SequenceScore::Perplexity { perplexity, .. } => -perplexity,
            SequenceScore::Frequency { count } => count,
        }
    }
}

/// Scoring operations consumed by the probes.
///
/// Each method defaults to [`BackendError::Unsupported`]; implementations
/// override the ones their family provides. Implementations must be
/// deterministic and free of hidden state between calls.
pub trait Backend {
    fn descriptor(&self) -> &BackendDescriptor;

    /// Per-layer vectors of the tokens covering each character span.
    fn embed_tokens(&self, text: &str, targets: &[CharSpan]) -> Result<Embeddings, BackendError> {
        let _ = (text, targets);
        Err(self.descriptor().unsupported("embed_tokens"))
    }

    /// Top-`k` fillers for the single [`MASK_TOKEN`] in `text`, by descending
    /// probability.
    fn fill_mask_topk(&self, text: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        let _ = (text, k);
        Err(self.descriptor().unsupported("fill_mask_topk"))
    }

    /// Up to `k` complete words likely to follow `prefix`.
    fn topk_next_words(&self, prefix: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        let _ = (prefix, k);
        Err(self.descriptor().unsupported("topk_next_words"))
    }

    /// Perplexity (pseudo-perplexity for masked encoders) or phrase
    /// frequency for n-gram tables.
    fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
        let _ = text;
        Err(self.descriptor().unsupported("sequence_score"))
    }

    /// Probability of each answer word as the immediate continuation of
    /// `prompt`, summed over its casing and leading-space variants.
    fn answer_probabilities(
        &self,
        prompt: &str,
        answers: &[&str],
    ) -> Result<BTreeMap<String, f64>, BackendError> {
        let _ = (prompt, answers);
        Err(self.descriptor().unsupported("answer_probabilities"))
    }
}

macro_rules! forward_backend {
    ($ty:ty) => {
        impl<B: Backend + ?Sized> Backend for $ty {
            fn descriptor(&self) -> &BackendDescriptor {
                (**self).descriptor()
            }
            fn embed_tokens(
                &self,
                text: &str,
                targets: &[CharSpan],
            ) -> Result<Embeddings, BackendError> {
                (**self).embed_tokens(text, targets)
            }
            fn fill_mask_topk(&self, text: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
                (**self).fill_mask_topk(text, k)
            }
            fn topk_next_words(
                &self,
                prefix: &str,
                k: usize,
            ) -> Result<Vec<Candidate>, BackendError> {
                (**self).topk_next_words(prefix, k)
            }
            fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
                (**self).sequence_score(text)
            }
            fn answer_probabilities(
                &self,
                prompt: &str,
                answers: &[&str],
            ) -> Result<BTreeMap<String, f64>, BackendError> {
                (**self).answer_probabilities(prompt, answers)
            }
        }
    };
}

forward_backend!(&B);
forward_backend!(Box<B>);
forward_backend!(alloc::sync::Arc<B>);

pub fn count_masks(text: &str) -> usize {
    text.matches(MASK_TOKEN).count()
}

pub fn require_single_mask(text: &str) -> Result<(), BackendError> {
    match count_masks(text) {
        1 => Ok(()),
        n => Err(BackendError::MaskCount(n)),
    }
}

/// Maps character-span targets onto token index ranges. A token belongs to a
/// target when their spans overlap; every such token, with surrounding
/// whitespace trimmed, must lie inside the target and the tokens must be
/// contiguous.
pub fn align_spans(
    text: &str,
    tokens: &[CharSpan],
    targets: &[CharSpan],
) -> Result<Vec<TokenSpan>, BackendError> {
    let chars: Vec<char> = text.chars().collect();
    let trimmed = |span: &CharSpan| {
        let mut s = span.start.min(chars.len());
        let mut e = span.end.min(chars.len());
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        CharSpan::new(s, e)
    };
    targets
        .iter()
        .map(|target| {
            let misaligned = BackendError::Misaligned {
                start: target.start,
                end: target.end,
            };
            let hits: Vec<usize> = tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| {
                    let t = trimmed(t);
                    !t.is_empty() && t.overlaps(target)
                })
                .map(|(i, _)| i)
                .collect();
            let (&first, &last) = match (hits.first(), hits.last()) {
                (Some(f), Some(l)) => (f, l),
                _ => return Err(misaligned),
            };
            if last - first + 1 != hits.len() {
                return Err(misaligned);
            }
            for &i in &hits {
                let t = trimmed(&tokens[i]);
                if t.start < target.start || t.end > target.end {
                    return Err(misaligned);
                }
            }
            Ok(TokenSpan {
                start: first,
                end: last + 1,
            })
        })
        .collect()
}

/// `exp(-mean log p)` over per-token log-probabilities. For a masked encoder
/// the log-probabilities are those of each original token with that token
/// masked, which yields the pseudo-perplexity.
pub fn perplexity_from_log_probs(log_probs: &[f64]) -> Result<SequenceScore, BackendError> {
    if log_probs.is_empty() {
        return Err(BackendError::EmptyInput);
    }
    let mean = log_probs.iter().sum::<f64>() / log_probs.len() as f64;
    Ok(SequenceScore::Perplexity {
        mean_log_prob: mean,
        perplexity: libm::exp(-mean),
        tokens: log_probs.len(),
    })
}

/// Surface variants summed when reading an answer word's probability:
/// lowercase and capitalized, each with and without a leading space.
pub fn answer_variants(word: &str) -> Vec<String> {
    let lower = word.to_lowercase();
    let mut capital = String::new();
    let mut chars = lower.chars();
    if let Some(c) = chars.next() {
        capital.extend(c.to_uppercase());
        capital.push_str(chars.as_str());
    }
    let mut seen = BTreeSet::new();
    [
        lower.clone(),
        capital.clone(),
        alloc::format!(" {lower}"),
        alloc::format!(" {capital}"),
    ]
    .into_iter()
    .filter(|v| seen.insert(v.clone()))
    .collect()
}

/// Next-token distribution over decoded sub-word pieces, used to extract
/// whole words from generative backends.
pub trait NextTokenSource {
    /// The `n` most probable next pieces after `prefix`, decoded to text
    /// (a leading space marks a word boundary), by descending probability.
    fn next_tokens(&self, prefix: &str, n: usize) -> Result<Vec<(String, f64)>, BackendError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordExtraction {
    /// Size of the next-token candidate list inspected for word starts.
    pub candidates: usize,
    /// Maximum number of pieces one word may span.
    pub max_pieces: usize,
}

impl Default for WordExtraction {
    fn default() -> Self {
        Self {
            candidates: 50,
            max_pieces: 4,
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() && c.is_lowercase()
}

fn is_word(piece: &str) -> bool {
    !piece.is_empty() && piece.chars().all(is_word_char)
}

/// Ranks next-token candidates and keeps those that start a standalone
/// lowercase alphabetic word, greedily extending each with the most probable
/// continuation piece until a word boundary. Duplicates are dropped and the
/// list is truncated to `k`; it may be shorter when candidates are filtered.
pub fn extract_next_words<S: NextTokenSource + ?Sized>(
    source: &S,
    prefix: &str,
    k: usize,
    opts: WordExtraction,
) -> Result<Vec<Candidate>, BackendError> {
    let mut out = Vec::new();
    if k == 0 {
        return Ok(out);
    }
    let at_boundary = prefix.is_empty() || prefix.ends_with(char::is_whitespace);
    let mut seen = BTreeSet::new();
    for (piece, p) in source.next_tokens(prefix, opts.candidates)? {
        let starts_word = at_boundary || piece.starts_with(char::is_whitespace);
        let head = piece.trim_start();
        if !starts_word || !is_word(head) {
            continue;
        }
        let mut word = head.to_string();
        let mut probability = p;
        let mut text = alloc::format!("{prefix}{piece}");
        for _ in 1..opts.max_pieces {
            let next = source.next_tokens(&text, 1)?;
            match next.first() {
                Some((cont, q)) if is_word(cont) => {
                    word.push_str(cont);
                    text.push_str(cont);
                    probability *= q;
                }
                _ => break,
            }
        }
        if seen.insert(word.clone()) {
            out.push(Candidate { word, probability });
            if out.len() == k {
                break;
            }
        }
    }
    Ok(out)
}
