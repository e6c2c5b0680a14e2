//! Static word-vector backend (one layer, context-independent).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::backend::{Backend, BackendDescriptor, CharSpan, Embeddings, Family};
use crate::error::BackendError;

#[derive(Clone, Debug)]
pub struct StaticVectors {
    descriptor: BackendDescriptor,
    vectors: BTreeMap<String, Vec<f32>>,
}

/// Result of building a table: the backend plus the words that were defined
/// more than once (the last definition wins).
#[derive(Clone, Debug)]
pub struct StaticVectorsBuild {
    pub vectors: StaticVectors,
    pub duplicates: Vec<String>,
}

impl StaticVectors {
    /// Builds from `(word, vector)` entries in file order.
    pub fn from_entries<I>(backend_id: &str, entries: I) -> Result<StaticVectorsBuild, BackendError>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let mut vectors = BTreeMap::new();
        let mut duplicates = Vec::new();
        let mut dim = None;
        for (word, v) in entries {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(BackendError::Other(alloc::format!(
                        "vector for {word:?} has dimension {}, expected {d}",
                        v.len()
                    )))
                }
                _ => {}
            }
            if vectors.insert(word.clone(), v).is_some() {
                duplicates.push(word);
            }
        }
        let dim = dim.ok_or_else(|| BackendError::Other("no vectors".to_string()))?;
        let descriptor = BackendDescriptor::new(backend_id, Family::StaticVector, 1, dim)?;
        Ok(StaticVectorsBuild {
            vectors: Self {
                descriptor,
                vectors,
            },
            duplicates,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

impl Backend for StaticVectors {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    /// Each target span is looked up as one word; context is ignored.
    fn embed_tokens(&self, text: &str, targets: &[CharSpan]) -> Result<Embeddings, BackendError> {
        let per_target = targets
            .iter()
            .map(|span| {
                let word = span.slice(text).trim();
                if word.is_empty() {
                    return Err(BackendError::Misaligned {
                        start: span.start,
                        end: span.end,
                    });
                }
                let v = self
                    .vectors
                    .get(word)
                    .ok_or_else(|| BackendError::OutOfVocabulary(word.to_string()))?;
                Ok(vec![v.iter().map(|&x| f64::from(x)).collect()])
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Embeddings {
            layers: vec![per_target],
        })
    }
}
