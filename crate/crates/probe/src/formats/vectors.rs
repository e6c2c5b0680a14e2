use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::path::Path;

use scalar_probe_core::static_vectors::StaticVectors;

use crate::error::{Error, Result};

fn is_header(line: &str) -> bool {
    let parts: Vec<&str> = line.split_whitespace().collect();
    parts.len() == 2 && parts.iter().all(|p| p.parse::<u64>().is_ok())
}

/// Loads a `word v1 ... vd` text file (an optional `count dim` header line is
/// skipped). With `vocabulary`, only those words are kept. Duplicate words
/// keep their last vector and are reported with a warning.
pub fn load_static_vectors(
    path: &Path,
    backend_id: &str,
    vocabulary: Option<&BTreeSet<String>>,
) -> Result<StaticVectors> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() || (i == 0 && is_header(&line)) {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default();
        let n = parts.clone().count();
        match dim {
            None => dim = Some(n),
            Some(d) if d != n => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("dimension {n}, expected {d}"),
                ))
            }
            _ => {}
        }
        if vocabulary.is_some_and(|v| !v.contains(word)) {
            continue;
        }
        let v = parts
            .map(|p| p.parse::<f32>())
            .collect::<std::result::Result<Vec<f32>, _>>()
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        entries.push((word.to_string(), v));
    }
    if entries.is_empty() {
        return Err(Error::parse(path, 0, "no vectors loaded"));
    }
    let built = StaticVectors::from_entries(backend_id, entries)?;
    for word in &built.duplicates {
        log::warn!(
            "{}: duplicate vector for {word:?}; keeping the last",
            path.display()
        );
    }
    Ok(built.vectors)
}
