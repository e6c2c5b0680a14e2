use std::path::Path;

use scalar_probe_core::corpus::{published, ScaleManifest};
use scalar_probe_core::{Adjective, CorpusError, HalfScale, ScaleDataset};

use super::{data_lines, read_text};
use crate::error::{Error, Result};

/// Which counts a loaded dataset is checked against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ManifestCheck<M> {
    /// Published counts when the dataset id is a published one.
    #[default]
    Auto,
    Skip,
    Expect(M),
}

impl<M: Copy> ManifestCheck<M> {
    pub fn resolve(&self, dataset_id: &str, published: impl Fn(&str) -> Option<M>) -> Option<M> {
        match self {
            ManifestCheck::Auto => published(dataset_id),
            ManifestCheck::Skip => None,
            ManifestCheck::Expect(m) => Some(*m),
        }
    }
}

/// Parses `a < b = c < d`: `<` separates intensity levels, `=` joins ties.
pub fn parse_groups(spec: &str) -> std::result::Result<Vec<Vec<Adjective>>, CorpusError> {
    spec.split('<')
        .map(|group| {
            group
                .split('=')
                .map(|w| Adjective::new(w.trim()))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect()
}

pub fn parse_scale_dataset(text: &str, dataset_id: &str, path: &Path) -> Result<ScaleDataset> {
    let mut scales = Vec::new();
    for (line, content) in data_lines(text) {
        let (id, spec) = content
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line, "expected `scale_id<TAB>adj < adj ...`"))?;
        let groups = parse_groups(spec).map_err(|e| Error::parse(path, line, e.to_string()))?;
        let scale = HalfScale::new(id.trim(), groups)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        scales.push(scale);
    }
    ScaleDataset::new(dataset_id, scales).map_err(|source| Error::Corpus {
        path: path.into(),
        source,
    })
}

/// Loads a half-scale file and checks it against the manifest.
pub fn load_scale_dataset(
    path: &Path,
    dataset_id: &str,
    manifest: ManifestCheck<ScaleManifest>,
) -> Result<ScaleDataset> {
    let dataset = parse_scale_dataset(&read_text(path)?, dataset_id, path)?;
    if let Some(m) = manifest.resolve(dataset_id, published::scale_manifest) {
        dataset.check_manifest(&m).map_err(|source| Error::Corpus {
            path: path.into(),
            source,
        })?;
    }
    Ok(dataset)
}

/// Canonical text form: one scale per line, single spaces around operators.
pub fn write_scale_dataset(dataset: &ScaleDataset) -> String {
    let mut out = String::new();
    for scale in dataset.scales() {
        let groups: Vec<String> = scale
            .groups()
            .iter()
            .map(|g| {
                g.iter()
                    .map(Adjective::as_str)
                    .collect::<Vec<_>>()
                    .join(" = ")
            })
            .collect();
        out.push_str(scale.id());
        out.push('\t');
        out.push_str(&groups.join(" < "));
        out.push('\n');
    }
    out
}
