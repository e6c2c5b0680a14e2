use std::path::Path;

use scalar_probe_core::ngram::NgramTable;

use super::{data_lines, read_text};
use crate::error::{Error, Result};

/// Loads a `phrase<TAB>count` table. Repeated phrases are summed.
pub fn load_ngram_table(path: &Path, backend_id: &str) -> Result<NgramTable> {
    let mut table = NgramTable::new(backend_id);
    for (line, content) in data_lines(&read_text(path)?) {
        let (phrase, count) = content
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(path, line, "expected `phrase<TAB>count`"))?;
        let count: f64 = count
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad count {count:?}")))?;
        if !(count >= 0.0) {
            return Err(Error::parse(path, line, "negative count"));
        }
        table.add(phrase, count);
    }
    Ok(table)
}
