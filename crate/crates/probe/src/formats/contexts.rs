use std::collections::BTreeMap;
use std::path::Path;

use scalar_probe_core::corpus::index_contexts;
use scalar_probe_core::{ContextSet, ScaleDataset};

use super::{data_lines, read_text};
use crate::error::{Error, Result};

/// Groups `scale_id<TAB>sentence` lines by scale, in first-seen order.
pub fn parse_context_sets(text: &str, path: &Path) -> Result<Vec<ContextSet>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_scale: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (line, content) in data_lines(text) {
        let (id, sentence) = content
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line, "expected `scale_id<TAB>sentence`"))?;
        let id = id.trim().to_string();
        if !by_scale.contains_key(&id) {
            order.push(id.clone());
        }
        by_scale
            .entry(id)
            .or_default()
            .push(sentence.trim().to_string());
    }
    order
        .into_iter()
        .map(|id| {
            let sentences = by_scale.remove(&id).unwrap_or_default();
            ContextSet::new(&id, sentences).map_err(|source| Error::Corpus {
                path: path.into(),
                source,
            })
        })
        .collect()
}

/// Loads context sentences and checks every scale id against `scales`.
pub fn load_context_sets(
    path: &Path,
    scales: &ScaleDataset,
) -> Result<BTreeMap<String, ContextSet>> {
    let sets = parse_context_sets(&read_text(path)?, path)?;
    index_contexts(sets, scales).map_err(|source| Error::Corpus {
        path: path.into(),
        source,
    })
}

pub fn write_context_sets<'a>(sets: impl IntoIterator<Item = &'a ContextSet>) -> String {
    let mut out = String::new();
    for set in sets {
        for s in set.sentences() {
            out.push_str(set.scale_id());
            out.push('\t');
            out.push_str(s);
            out.push('\n');
        }
    }
    out
}
