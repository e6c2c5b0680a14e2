use std::collections::BTreeSet;
use std::path::Path;

use scalar_probe_core::indirect::{Direction, Template, TemplateCategory};

use super::{data_lines, read_text};
use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/templates.tsv");

/// Parses `template_id<TAB>category<TAB>direction<TAB>pattern` lines.
pub fn parse_templates(text: &str, path: &Path) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, content) in data_lines(text) {
        let cols: Vec<&str> = content.split('\t').collect();
        let [id, category, direction, pattern] = cols[..] else {
            return Err(Error::parse(path, line, "expected 4 tab-separated columns"));
        };
        let id: u32 = id
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad template id {id:?}")))?;
        let category = match category.trim() {
            "membership" => TemplateCategory::Membership,
            "intensity" => TemplateCategory::Intensity,
            other => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("unknown category {other:?}"),
                ))
            }
        };
        let direction = match direction.trim() {
            "weak-strong" => Direction::WeakStrong,
            "strong-weak" => Direction::StrongWeak,
            other => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("unknown direction {other:?}"),
                ))
            }
        };
        if !seen.insert((category, id)) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate {} template id {id}", category.as_str()),
            ));
        }
        let t = Template::new(id, category, direction, pattern.trim())
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

pub fn load_templates(path: &Path) -> Result<Vec<Template>> {
    parse_templates(&read_text(path)?, path)
}

/// The shipped template set (4 membership, 34 intensity).
pub fn builtin_templates() -> Vec<Template> {
    parse_templates(BUILTIN, Path::new("data/templates.tsv")).expect("shipped templates parse")
}
