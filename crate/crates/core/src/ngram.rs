//! Offline phrase-frequency backend.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::{Backend, BackendDescriptor, Candidate, Family, SequenceScore};
use crate::error::BackendError;

/// Collapses runs of whitespace to single spaces and trims.
pub fn normalize_phrase(phrase: &str) -> String {
    phrase.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug)]
pub struct NgramTable {
    descriptor: BackendDescriptor,
    counts: BTreeMap<String, f64>,
}

impl NgramTable {
    pub fn new(backend_id: &str) -> Self {
        Self {
            descriptor: BackendDescriptor::new(backend_id, Family::NgramTable, 1, 1)
                .expect("valid n-gram descriptor"),
            counts: BTreeMap::new(),
        }
    }

    /// Adds `count` to the phrase's frequency.
    pub fn add(&mut self, phrase: &str, count: f64) {
        *self.counts.entry(normalize_phrase(phrase)).or_insert(0.0) += count;
    }

    pub fn count(&self, phrase: &str) -> f64 {
        self.counts
            .get(&normalize_phrase(phrase))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl Backend for NgramTable {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    /// Stored frequency of the exact phrase, 0 when absent.
    fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
        Ok(SequenceScore::Frequency {
            count: self.count(text),
        })
    }

    /// Words that continue `prefix` in stored phrases, weighted by phrase
    /// frequency and normalized over all continuations.
    fn topk_next_words(&self, prefix: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        let prefix = normalize_phrase(prefix);
        let lead = if prefix.is_empty() {
            String::new()
        } else {
            alloc::format!("{prefix} ")
        };
        let mut by_word: BTreeMap<String, f64> = BTreeMap::new();
        for (phrase, &count) in self.counts.range(lead.clone()..) {
            let Some(rest) = phrase.strip_prefix(&lead) else {
                break;
            };
            let Some(word) = rest.split(' ').next() else {
                continue;
            };
            let word = word.trim_end_matches(|c: char| !c.is_alphanumeric());
            if word.is_empty() || !word.chars().all(|c| c.is_lowercase() || c == '-') {
                continue;
            }
            *by_word.entry(word.to_string()).or_insert(0.0) += count;
        }
        let total: f64 = by_word.values().sum();
        let mut out: Vec<Candidate> = by_word
            .into_iter()
            .map(|(w, c)| Candidate {
                word: w,
                probability: if total > 0.0 { c / total } else { 0.0 },
            })
            .collect();
        out.sort_by(|a, b| {
            b.probability
                .total_cmp(&a.probability)
                .then_with(|| a.word.cmp(&b.word))
        });
        out.truncate(k);
        Ok(out)
    }
}
