//! Deterministic in-memory backends for tests, fixtures and smoke runs.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::backend::{
    align_spans, answer_variants, perplexity_from_log_probs, require_single_mask, Backend,
    BackendDescriptor, Candidate, CharSpan, Embeddings, Family, SequenceScore,
};
use crate::corpus::ScaleDataset;
use crate::error::BackendError;
use crate::vector::Vector;

/// Splits text into word tokens (runs of letters, digits and hyphens) and
/// single-character punctuation tokens, with character spans.
pub fn simple_tokens(text: &str) -> Vec<(String, CharSpan)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let is_word = |c: char| c.is_alphanumeric() || c == '-';
    for (i, c) in text.chars().enumerate() {
        if is_word(c) {
            if current.is_empty() {
                start = i;
            }
            current.push(c);
            continue;
        }
        if !current.is_empty() {
            out.push((core::mem::take(&mut current), CharSpan::new(start, i)));
        }
        if !c.is_whitespace() {
            out.push((c.to_string(), CharSpan::new(i, i + 1)));
        }
    }
    if !current.is_empty() {
        let n = text.chars().count();
        out.push((current, CharSpan::new(start, n)));
    }
    out
}

/// Context-blind encoder: every word maps to fixed sub-token vectors that are
/// identical at every layer and in every position.
#[derive(Clone, Debug)]
pub struct LexiconEncoder {
    descriptor: BackendDescriptor,
    pieces: BTreeMap<String, Vec<Vector>>,
}

impl LexiconEncoder {
    pub fn new(backend_id: &str, num_layers: usize, hidden_size: usize) -> Self {
        Self {
            descriptor: BackendDescriptor::new(
                backend_id,
                Family::MaskedEncoder,
                num_layers,
                hidden_size,
            )
            .expect("valid mock descriptor"),
            pieces: BTreeMap::new(),
        }
    }

    /// Identity backend over orthogonal scale axes: adjective at intensity
    /// level `g` of the `i`-th scale (across all datasets, in order) gets
    /// `e_i + 0.1 * g * e_0`. Dimension 0 is a shared intensity axis.
    pub fn orthogonal(datasets: &[&ScaleDataset], num_layers: usize) -> Self {
        let total: usize = datasets.iter().map(|d| d.scales().len()).sum();
        let mut enc = Self::new("identity-mock", num_layers, total + 1);
        let mut axis = 1;
        for d in datasets {
            for scale in d.scales() {
                for (level, group) in scale.groups().iter().enumerate() {
                    for adj in group {
                        let mut v = vec![0.0; total + 1];
                        v[0] = 0.1 * level as f64;
                        v[axis] = 1.0;
                        enc.insert(adj.as_str(), v);
                    }
                }
                axis += 1;
            }
        }
        enc
    }

    pub fn insert(&mut self, word: &str, v: Vector) {
        self.pieces.insert(word.to_string(), vec![v]);
    }

    pub fn insert_pieces(&mut self, word: &str, pieces: Vec<Vector>) {
        self.pieces.insert(word.to_string(), pieces);
    }

    /// Mean of the word's piece vectors.
    pub fn vector(&self, word: &str) -> Option<Vector> {
        let p = self.pieces.get(word)?;
        crate::vector::mean(p.iter().map(Vec::as_slice))
    }
}

impl Backend for LexiconEncoder {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn embed_tokens(&self, text: &str, targets: &[CharSpan]) -> Result<Embeddings, BackendError> {
        let tokens = simple_tokens(text);
        let spans: Vec<CharSpan> = tokens.iter().map(|t| t.1).collect();
        let aligned = align_spans(text, &spans, targets)?;
        let mut per_target = Vec::with_capacity(targets.len());
        for span in aligned {
            let mut vs = Vec::new();
            for (word, _) in &tokens[span.start..span.end] {
                let pieces = self
                    .pieces
                    .get(word)
                    .ok_or_else(|| BackendError::OutOfVocabulary(word.clone()))?;
                vs.extend(pieces.iter().cloned());
            }
            per_target.push(vs);
        }
        Ok(Embeddings {
            layers: vec![per_target; self.descriptor.num_layers],
        })
    }
}

/// Position-sensitive encoder: the token at word position `p` of word `w`
/// gets `[p, code(w), layer, 0, ...]`.
#[derive(Clone, Debug)]
pub struct PositionalEncoder {
    descriptor: BackendDescriptor,
}

impl PositionalEncoder {
    pub fn new(num_layers: usize, hidden_size: usize) -> Self {
        assert!(hidden_size >= 2);
        Self {
            descriptor: BackendDescriptor::new(
                "positional-mock",
                Family::MaskedEncoder,
                num_layers,
                hidden_size,
            )
            .expect("valid mock descriptor"),
        }
    }

    fn code(word: &str) -> f64 {
        word.bytes()
            .fold(0u32, |h, b| h.wrapping_mul(31).wrapping_add(u32::from(b))) as f64
            / 1e6
    }

    /// Vector at layer 1 for `word` at token position `position`.
    pub fn token_vector(&self, position: usize, word: &str) -> Vector {
        self.token_vector_at(1, position, word)
    }

    fn token_vector_at(&self, layer: usize, position: usize, word: &str) -> Vector {
        let mut v = vec![0.0; self.descriptor.hidden_size];
        v[0] = position as f64;
        v[1] = Self::code(word);
        if v.len() > 2 {
            v[2] = (layer - 1) as f64;
        }
        v
    }
}

impl Backend for PositionalEncoder {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn embed_tokens(&self, text: &str, targets: &[CharSpan]) -> Result<Embeddings, BackendError> {
        let tokens = simple_tokens(text);
        let spans: Vec<CharSpan> = tokens.iter().map(|t| t.1).collect();
        let aligned = align_spans(text, &spans, targets)?;
        let layers = (1..=self.descriptor.num_layers)
            .map(|layer| {
                aligned
                    .iter()
                    .map(|span| {
                        (span.start..span.end)
                            .map(|p| self.token_vector_at(layer, p, &tokens[p].0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Embeddings { layers })
    }
}

/// Masked encoder assigning probability `p` to every original token when it
/// is masked, over whitespace tokens. Its pseudo-perplexity is `1 / p`.
#[derive(Clone, Debug)]
pub struct UniformMaskedLm {
    descriptor: BackendDescriptor,
    p: f64,
}

impl UniformMaskedLm {
    pub fn new(p: f64) -> Self {
        Self {
            descriptor: BackendDescriptor::new("uniform-mlm", Family::MaskedEncoder, 1, 1)
                .expect("valid mock descriptor"),
            p,
        }
    }
}

impl Backend for UniformMaskedLm {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
        let log_probs: Vec<f64> = text.split_whitespace().map(|_| libm::log(self.p)).collect();
        perplexity_from_log_probs(&log_probs)
    }
}

/// Sequence scorer backed by a lookup table of perplexities.
#[derive(Clone, Debug)]
pub struct TableScorer {
    descriptor: BackendDescriptor,
    table: BTreeMap<String, f64>,
}

impl TableScorer {
    pub fn new(family: Family) -> Self {
        Self {
            descriptor: BackendDescriptor::new("table-scorer", family, 1, 1)
                .expect("valid mock descriptor"),
            table: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, text: &str, perplexity: f64) {
        self.table.insert(text.to_string(), perplexity);
    }
}

impl Backend for TableScorer {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
        let perplexity = *self
            .table
            .get(text)
            .ok_or_else(|| BackendError::Other(alloc::format!("no score for {text:?}")))?;
        Ok(SequenceScore::Perplexity {
            mean_log_prob: -libm::log(perplexity),
            perplexity,
            tokens: text.split_whitespace().count(),
        })
    }
}

/// Backend with fixed next-token distributions, optionally per prompt.
///
/// Serves mask filling (masked-encoder family), next-word ranking and answer
/// probabilities (generative families) from the same tables.
#[derive(Clone, Debug)]
pub struct DistributionBackend {
    descriptor: BackendDescriptor,
    default: Vec<(String, f64)>,
    per_prompt: BTreeMap<String, Vec<(String, f64)>>,
}

impl DistributionBackend {
    pub fn new(family: Family, default: &[(&str, f64)]) -> Self {
        Self {
            descriptor: BackendDescriptor::new("distribution-mock", family, 1, 1)
                .expect("valid mock descriptor"),
            default: Self::sorted(default),
            per_prompt: BTreeMap::new(),
        }
    }

    fn sorted(dist: &[(&str, f64)]) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = dist.iter().map(|(w, p)| (w.to_string(), *p)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn with_prompt(mut self, prompt: &str, dist: &[(&str, f64)]) -> Self {
        self.per_prompt
            .insert(prompt.to_string(), Self::sorted(dist));
        self
    }

    fn dist(&self, prompt: &str) -> &[(String, f64)] {
        self.per_prompt.get(prompt).unwrap_or(&self.default)
    }
}

impl Backend for DistributionBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn fill_mask_topk(&self, text: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        if self.descriptor.family != Family::MaskedEncoder {
            return Err(self.descriptor.unsupported("fill_mask_topk"));
        }
        require_single_mask(text)?;
        Ok(self
            .dist(text)
            .iter()
            .take(k)
            .map(|(w, p)| Candidate::new(w.trim(), *p))
            .collect())
    }

    fn topk_next_words(&self, prefix: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        if !self.descriptor.family.is_generative() {
            return Err(self.descriptor.unsupported("topk_next_words"));
        }
        Ok(self
            .dist(prefix)
            .iter()
            .take(k)
            .map(|(w, p)| Candidate::new(w.trim(), *p))
            .collect())
    }

    fn answer_probabilities(
        &self,
        prompt: &str,
        answers: &[&str],
    ) -> Result<BTreeMap<String, f64>, BackendError> {
        if !self.descriptor.family.is_generative() {
            return Err(self.descriptor.unsupported("answer_probabilities"));
        }
        let dist = self.dist(prompt);
        Ok(answers
            .iter()
            .map(|a| {
                let mass = answer_variants(a)
                    .iter()
                    .filter_map(|v| dist.iter().find(|(w, _)| w == v).map(|(_, p)| *p))
                    .sum();
                (a.to_string(), mass)
            })
            .collect())
    }
}
