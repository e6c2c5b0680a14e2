//! Content-addressed disk cache for backend calls.
//!
//! Each entry is one JSON file at `<dir>/<operation>/<sha256>.json`, keyed by
//! the backend id, the operation name and the serialized call input. Writes
//! go to a temporary file that is renamed into place, so readers never see a
//! partial entry and concurrent writers of one key race harmlessly.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use scalar_probe_core::backend::{Candidate, Embeddings};
use scalar_probe_core::{Backend, BackendDescriptor, BackendError, CharSpan, SequenceScore};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(backend_id: &str, operation: &str, input: &str) -> String {
        let mut h = Sha256::new();
        for part in [backend_id, operation, input] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(h.finalize())
    }

    fn path(&self, operation: &str, key: &str) -> PathBuf {
        self.dir.join(operation).join(format!("{key}.json"))
    }

    /// A stored value, or `None` when absent or unreadable.
    pub fn get<T: DeserializeOwned>(
        &self,
        backend_id: &str,
        operation: &str,
        input: &str,
    ) -> Option<T> {
        let path = self.path(operation, &Self::key(backend_id, operation, input));
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn put<T: Serialize>(
        &self,
        backend_id: &str,
        operation: &str,
        input: &str,
        value: &T,
    ) -> Result<()> {
        let key = Self::key(backend_id, operation, input);
        let path = self.path(operation, &key);
        let parent = path.parent().expect("cache entries live in a subdirectory");
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let payload = serde_json::to_vec(value).map_err(|e| Error::Record(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
        tmp.write_all(&payload)
            .map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }
}

/// Wraps a backend so every successful call is served from, or stored in,
/// a [`DiskCache`]. Errors are never cached.
pub struct CachedBackend<B> {
    inner: B,
    cache: DiskCache,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<B: Backend> CachedBackend<B> {
    pub fn new(inner: B, cache: DiskCache) -> Self {
        Self {
            inner,
            cache,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn cached<I, T>(
        &self,
        operation: &str,
        input: &I,
        call: impl FnOnce() -> Result<T, BackendError>,
    ) -> Result<T, BackendError>
    where
        I: Serialize + ?Sized,
        T: Serialize + DeserializeOwned,
    {
        let input = serde_json::to_string(input).expect("cache inputs serialize");
        let id = &self.inner.descriptor().backend_id;
        if let Some(v) = self.cache.get(id, operation, &input) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = call()?;
        if let Err(e) = self.cache.put(id, operation, &input, &value) {
            log::warn!("cache write failed: {e}");
        }
        Ok(value)
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn descriptor(&self) -> &BackendDescriptor {
        self.inner.descriptor()
    }

    fn embed_tokens(&self, text: &str, targets: &[CharSpan]) -> Result<Embeddings, BackendError> {
        self.cached("embed_tokens", &(text, targets), || {
            self.inner.embed_tokens(text, targets)
        })
    }

    fn fill_mask_topk(&self, text: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        self.cached("fill_mask_topk", &(text, k), || {
            self.inner.fill_mask_topk(text, k)
        })
    }

    fn topk_next_words(&self, prefix: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        self.cached("topk_next_words", &(prefix, k), || {
            self.inner.topk_next_words(prefix, k)
        })
    }

    fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
        self.cached("sequence_score", text, || self.inner.sequence_score(text))
    }

    fn answer_probabilities(
        &self,
        prompt: &str,
        answers: &[&str],
    ) -> Result<BTreeMap<String, f64>, BackendError> {
        self.cached("answer_probabilities", &(prompt, answers), || {
            self.inner.answer_probabilities(prompt, answers)
        })
    }
}
