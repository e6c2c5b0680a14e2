//! Persisted run records.
//!
//! A record separates the deterministic part (`result` and `summary`) from
//! run metadata (timestamps, cache statistics). Rerunning an identical
//! config reproduces the deterministic part byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scalar_probe_core::direct::{IntensityReport, MembershipReport};
use scalar_probe_core::indirect::{CompletionResult, MinimalPairResult};
use scalar_probe_core::pragmatics::{CalibrationState, DiversityResult, LrResult};
use scalar_probe_core::BackendDescriptor;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub id: String,
    pub role: String,
    pub size: usize,
    /// Distinct pairs for scale datasets, yes items for implicature data.
    pub secondary: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateMetric {
    pub template_id: u32,
    pub dataset_id: String,
    pub value: f64,
}

/// Template probe results: every template's metric on every scored
/// dataset, the two selection protocols, and full outcomes on the
/// evaluated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndirectRun<T> {
    pub eval_dataset: String,
    pub metrics: Vec<TemplateMetric>,
    pub best_in_dataset: u32,
    pub held_out: Option<u32>,
    /// Template chosen by the configured protocol.
    pub selected: u32,
    pub eval_results: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawAnswer {
    pub item_id: String,
    pub gold: bool,
    pub sy: f64,
    pub sn: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityRun {
    pub calibration: Option<CalibrationState>,
    pub raw: Vec<RawAnswer>,
    pub results: Vec<DiversityResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrRun {
    pub results: Vec<LrResult>,
    /// Index of the configuration with the highest macro-F1.
    pub best: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "kebab-case")]
pub enum ProbeResult {
    MembershipDirect(MembershipReport),
    IntensityDirect(IntensityReport),
    MembershipIndirect(IndirectRun<CompletionResult>),
    IntensityIndirect(IndirectRun<MinimalPairResult>),
    Diversity(DiversityRun),
    LrBaseline(LrRun),
}

/// A reported number: mean over seeds (std when several seeds) and an
/// optional annotation such as the chosen template or layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub std: Option<f64>,
    pub note: Option<String>,
}

impl Cell {
    pub fn single(value: f64, note: Option<String>) -> Self {
        Self {
            mean: value,
            std: None,
            note,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Row label in reports (backend id, plus mode where relevant).
    pub row: String,
    /// Probe variant shown next to the row label, e.g. the intensity mode.
    pub variant: Option<String>,
    /// Column label in reports (evaluated dataset).
    pub column: String,
    pub cells: BTreeMap<String, Cell>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// Absent for probes that use no model.
    pub backend: Option<BackendDescriptor>,
    pub datasets: Vec<DatasetInfo>,
    pub started_at: String,
    pub finished_at: String,
    pub cache: Option<CacheStats>,
    pub warnings: Vec<String>,
    pub result: ProbeResult,
    pub summary: Summary,
}

impl RunRecord {
    /// JSON of the deterministic part.
    pub fn metrics_json(&self) -> String {
        serde_json::to_string(&(&self.result, &self.summary)).expect("record serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Parses a record, refusing any schema version other than the current
    /// one.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Record(e.to_string()))?;
        match value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
        {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::Record(format!(
                    "schema version {v} is not supported (expected {SCHEMA_VERSION})"
                )))
            }
            None => return Err(Error::Record("missing schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Record(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Record(m) => Error::Record(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Writes `<output_dir>/runs/<config-hash>/record.json`.
    pub fn save(&self, output_dir: &Path) -> Result<PathBuf> {
        let dir = output_dir.join("runs").join(&self.config_hash);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join("record.json");
        std::fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
