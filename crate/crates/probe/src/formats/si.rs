use std::path::Path;

use scalar_probe_core::corpus::published;
use scalar_probe_core::corpus::{SiItemFields, SiManifest};
use scalar_probe_core::{CorpusError, SiDataset, SiItem};
use serde::{Deserialize, Serialize};

use super::read_text;
use super::scales::ManifestCheck;
use crate::error::{Error, Result};

/// A gold label column may hold a bool, `yes`/`no`, or 0/1.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LabelField {
    Bool(bool),
    Num(f64),
    Text(String),
}

impl LabelField {
    fn value(&self) -> Option<bool> {
        match self {
            LabelField::Bool(b) => Some(*b),
            LabelField::Num(n) if *n == 1.0 => Some(true),
            LabelField::Num(n) if *n == 0.0 => Some(false),
            LabelField::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "yes" | "true" | "1" => Some(true),
                "no" | "false" | "0" => Some(false),
                _ => None,
            },
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawItem {
    item_id: Option<String>,
    utterance: Option<String>,
    question_predicate: Option<String>,
    weak_adj: Option<String>,
    strong_adj: Option<String>,
    proportion_yes: Option<f64>,
    #[serde(default)]
    gold_label: Option<LabelField>,
    #[serde(default)]
    string_surprisal: Option<f64>,
    #[serde(default)]
    concept_surprisal: Option<f64>,
}

impl RawItem {
    fn validate(self) -> std::result::Result<SiItem, CorpusError> {
        let item_id = self.item_id.unwrap_or_default();
        let proportion = self
            .proportion_yes
            .ok_or_else(|| CorpusError::MissingField {
                item_id: item_id.clone(),
                field: "proportion_yes",
            })?;
        let item = SiItem::new(SiItemFields {
            item_id: &item_id,
            utterance: self.utterance.as_deref().unwrap_or_default(),
            question_predicate: self.question_predicate.as_deref().unwrap_or_default(),
            weak_adj: self.weak_adj.as_deref().unwrap_or_default(),
            strong_adj: self.strong_adj.as_deref().unwrap_or_default(),
            proportion_yes: proportion,
            string_surprisal: self.string_surprisal,
            concept_surprisal: self.concept_surprisal,
        })?;
        // A supplied label must agree with the derived one.
        if let Some(label) = &self.gold_label {
            if label.value() != Some(item.gold_label) {
                return Err(CorpusError::GoldLabelMismatch {
                    item_id: item.item_id.clone(),
                    proportion,
                });
            }
        }
        Ok(item)
    }
}

fn corpus_err(path: &Path) -> impl Fn(CorpusError) -> Error + '_ {
    move |source| Error::Corpus {
        path: path.into(),
        source,
    }
}

pub fn parse_si_csv(text: &str, dataset_id: &str, path: &Path) -> Result<SiDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let mut items = Vec::new();
    for row in reader.records() {
        let record = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw: RawItem = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        items.push(
            raw.validate()
                .map_err(|e| Error::parse(path, line, e.to_string()))?,
        );
    }
    SiDataset::new(dataset_id, items).map_err(corpus_err(path))
}

/// A JSON file holds an array of item objects.
pub fn parse_si_json(text: &str, dataset_id: &str, path: &Path) -> Result<SiDataset> {
    let raw: Vec<RawItem> =
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let items = raw
        .into_iter()
        .map(RawItem::validate)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(corpus_err(path))?;
    SiDataset::new(dataset_id, items).map_err(corpus_err(path))
}

/// Loads a `.csv` or `.json` implicature file and checks its label counts.
pub fn load_si_dataset(
    path: &Path,
    dataset_id: &str,
    manifest: ManifestCheck<SiManifest>,
) -> Result<SiDataset> {
    let text = read_text(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let dataset = if is_json {
        parse_si_json(&text, dataset_id, path)?
    } else {
        parse_si_csv(&text, dataset_id, path)?
    };
    if let Some(m) = manifest.resolve(dataset_id, published::si_manifest) {
        dataset.check_manifest(&m).map_err(corpus_err(path))?;
    }
    let (total, yes, no) = dataset.counts();
    log::info!("{}: {total} items ({yes} yes / {no} no)", path.display());
    Ok(dataset)
}

#[derive(Serialize)]
struct OutRow<'a> {
    item_id: &'a str,
    utterance: &'a str,
    question_predicate: &'a str,
    weak_adj: &'a str,
    strong_adj: &'a str,
    proportion_yes: f64,
    gold_label: &'static str,
    string_surprisal: Option<f64>,
    concept_surprisal: Option<f64>,
}

pub fn write_si_csv(dataset: &SiDataset) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for item in dataset.items() {
        let row = OutRow {
            item_id: &item.item_id,
            utterance: &item.utterance,
            question_predicate: &item.question_predicate,
            weak_adj: item.weak_adj.as_str(),
            strong_adj: item.strong_adj.as_str(),
            proportion_yes: item.proportion_yes,
            gold_label: if item.gold_label { "yes" } else { "no" },
            string_surprisal: item.features.map(|f| f.string_surprisal),
            concept_surprisal: item.features.map(|f| f.concept_surprisal),
        };
        writer.serialize(row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}
