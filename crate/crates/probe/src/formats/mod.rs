//! Line-oriented file formats for scales, contexts, implicature items,
//! templates, word vectors and phrase counts. All are UTF-8; blank lines and
//! lines starting with `#` are ignored in the tab-separated formats.

use std::path::Path;

use crate::error::{Error, Result};

pub mod contexts;
pub mod ngram;
pub mod scales;
pub mod si;
pub mod templates;
pub mod vectors;

pub use contexts::{load_context_sets, parse_context_sets, write_context_sets};
pub use ngram::load_ngram_table;
pub use scales::{load_scale_dataset, parse_scale_dataset, write_scale_dataset, ManifestCheck};
pub use si::{load_si_dataset, parse_si_csv, parse_si_json, write_si_csv};
pub use templates::{builtin_templates, load_templates, parse_templates};
pub use vectors::load_static_vectors;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-comment lines with 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// Dataset id from a file stem, used when no id is configured.
pub fn stem_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
