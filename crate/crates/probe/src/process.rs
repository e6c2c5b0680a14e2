//! Backends served by a child process over a JSON-lines protocol.
//!
//! Each request is one JSON object on the child's stdin, each reply one JSON
//! object on its stdout: `{"ok": ...}` or `{"error": "...", "kind": "..."}`.
//! Operations:
//!
//! | op | request fields | `ok` payload |
//! |----|----------------|--------------|
//! | `describe` | | `{backend_id, family, num_layers, hidden_size}` |
//! | `embed` | `text`, `spans` (char offsets) | `layers[layer][target][token][dim]` |
//! | `fill_mask` | `text`, `k` | `[[word, p], ...]` |
//! | `next_tokens` | `prefix`, `n` | `[[piece, p], ...]` |
//! | `token_logprobs` | `text` | `[logp, ...]` (pseudo log-likelihoods for masked encoders) |
//! | `continuation_probs` | `prompt`, `variants` (one list per answer) | `[p, ...]` |
//!
//! `scripts/hf_backend.py` implements the protocol for Hugging Face models.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use scalar_probe_core::backend::{
    answer_variants, extract_next_words, perplexity_from_log_probs, require_single_mask, Candidate,
    Embeddings, NextTokenSource, WordExtraction,
};
use scalar_probe_core::{
    Backend, BackendDescriptor, BackendError, CharSpan, Family, SequenceScore,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

struct Pipe {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

pub struct ProcessBackend {
    descriptor: BackendDescriptor,
    pipe: Mutex<Pipe>,
    extraction: WordExtraction,
}

#[derive(Deserialize)]
struct Describe {
    backend_id: String,
    family: Family,
    num_layers: usize,
    hidden_size: usize,
}

fn other(msg: impl std::fmt::Display) -> BackendError {
    BackendError::Other(msg.to_string())
}

impl ProcessBackend {
    /// Starts `command[0]` with the remaining arguments and asks it to
    /// describe itself. `backend_id` overrides the reported id.
    pub fn spawn(command: &[String], backend_id: Option<&str>) -> Result<Self, BackendError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| other("empty backend command"))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| other(format!("cannot start {program:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let pipe = Mutex::new(Pipe {
            child,
            stdin,
            stdout,
        });
        let placeholder = BackendDescriptor::new("process", Family::Causal, 1, 1)?;
        let mut backend = Self {
            descriptor: placeholder,
            pipe,
            extraction: WordExtraction::default(),
        };
        let d: Describe = backend.request(json!({"op": "describe"}))?;
        let mut descriptor = BackendDescriptor::new(
            backend_id.unwrap_or(&d.backend_id),
            d.family,
            d.num_layers,
            d.hidden_size,
        )?;
        descriptor.concurrent = false;
        backend.descriptor = descriptor;
        Ok(backend)
    }

    fn request<T: DeserializeOwned>(&self, req: Value) -> Result<T, BackendError> {
        let mut pipe = self
            .pipe
            .lock()
            .map_err(|_| other("backend pipe poisoned"))?;
        let stdin = pipe
            .stdin
            .as_mut()
            .ok_or_else(|| other("backend process closed"))?;
        let mut line = serde_json::to_string(&req).map_err(other)?;
        line.push('\n');
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| other(format!("write to backend process: {e}")))?;
        let mut reply = String::new();
        let n = pipe
            .stdout
            .read_line(&mut reply)
            .map_err(|e| other(format!("read from backend process: {e}")))?;
        if n == 0 {
            return Err(other("backend process exited"));
        }
        let mut value: Value = serde_json::from_str(&reply)
            .map_err(|e| other(format!("malformed reply {reply:?}: {e}")))?;
        if let Some(message) = value.get("error") {
            let message = message.as_str().unwrap_or_default().to_string();
            return Err(match value.get("kind").and_then(Value::as_str) {
                Some("unsupported") => self.descriptor.unsupported("process operation"),
                Some("too_long") => BackendError::TooLong {
                    tokens: value.get("tokens").and_then(Value::as_u64).unwrap_or(0) as usize,
                    limit: value.get("limit").and_then(Value::as_u64).unwrap_or(0) as usize,
                },
                Some("misaligned") => BackendError::Misaligned {
                    start: value.get("start").and_then(Value::as_u64).unwrap_or(0) as usize,
                    end: value.get("end").and_then(Value::as_u64).unwrap_or(0) as usize,
                },
                Some("empty") => BackendError::EmptyInput,
                _ => BackendError::Other(message),
            });
        }
        let ok = value
            .get_mut("ok")
            .ok_or_else(|| other(format!("reply without ok: {reply:?}")))?;
        serde_json::from_value(ok.take()).map_err(|e| other(format!("unexpected reply shape: {e}")))
    }

    fn candidates(pairs: Vec<(String, f64)>) -> Vec<Candidate> {
        pairs
            .into_iter()
            .map(|(word, probability)| Candidate { word, probability })
            .collect()
    }
}

impl Drop for ProcessBackend {
    fn drop(&mut self) {
        if let Ok(pipe) = self.pipe.get_mut() {
            // Closing stdin ends the child's read loop.
            pipe.stdin.take();
            let _ = pipe.child.wait();
        }
    }
}

impl NextTokenSource for ProcessBackend {
    fn next_tokens(&self, prefix: &str, n: usize) -> Result<Vec<(String, f64)>, BackendError> {
        self.request(json!({"op": "next_tokens", "prefix": prefix, "n": n}))
    }
}

impl Backend for ProcessBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn embed_tokens(&self, text: &str, targets: &[CharSpan]) -> Result<Embeddings, BackendError> {
        let spans: Vec<[usize; 2]> = targets.iter().map(|s| [s.start, s.end]).collect();
        let layers: Vec<Vec<Vec<Vec<f64>>>> =
            self.request(json!({"op": "embed", "text": text, "spans": spans}))?;
        if layers.len() != self.descriptor.num_layers {
            return Err(other(format!(
                "backend returned {} layers, expected {}",
                layers.len(),
                self.descriptor.num_layers
            )));
        }
        Ok(Embeddings { layers })
    }

    fn fill_mask_topk(&self, text: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        if self.descriptor.family != Family::MaskedEncoder {
            return Err(self.descriptor.unsupported("fill_mask_topk"));
        }
        require_single_mask(text)?;
        let pairs = self.request(json!({"op": "fill_mask", "text": text, "k": k}))?;
        Ok(Self::candidates(pairs))
    }

    fn topk_next_words(&self, prefix: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        if !self.descriptor.family.is_generative() {
            return Err(self.descriptor.unsupported("topk_next_words"));
        }
        extract_next_words(self, prefix, k, self.extraction)
    }

    fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::EmptyInput);
        }
        let log_probs: Vec<f64> = self.request(json!({"op": "token_logprobs", "text": text}))?;
        perplexity_from_log_probs(&log_probs)
    }

    fn answer_probabilities(
        &self,
        prompt: &str,
        answers: &[&str],
    ) -> Result<BTreeMap<String, f64>, BackendError> {
        if !self.descriptor.family.is_generative() {
            return Err(self.descriptor.unsupported("answer_probabilities"));
        }
        if answers.is_empty() {
            return Ok(BTreeMap::new());
        }
        let variants: Vec<Vec<String>> = answers.iter().map(|a| answer_variants(a)).collect();
        let probs: Vec<f64> = self
            .request(json!({"op": "continuation_probs", "prompt": prompt, "variants": variants}))?;
        if probs.len() != answers.len() {
            return Err(other(
                "continuation_probs returned the wrong number of values",
            ));
        }
        Ok(answers.iter().map(|a| a.to_string()).zip(probs).collect())
    }
}
