//! Experiment configuration: one TOML file per experiment, with
//! `key.path=value` overrides applied before validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scalar_probe_core::direct::{IntensityMode, MembershipVariant};
use scalar_probe_core::pragmatics::Strategy;
use scalar_probe_core::{Family, PoolingMode, RepresentationMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable overriding `cache_dir`.
pub const CACHE_ENV: &str = "PROBE_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    MembershipDirect,
    MembershipIndirect,
    IntensityDirect,
    IntensityIndirect,
    Diversity,
    LrBaseline,
}

impl ProbeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::MembershipDirect => "membership-direct",
            ProbeKind::MembershipIndirect => "membership-indirect",
            ProbeKind::IntensityDirect => "intensity-direct",
            ProbeKind::IntensityIndirect => "intensity-indirect",
            ProbeKind::Diversity => "diversity",
            ProbeKind::LrBaseline => "lr-baseline",
        }
    }

    fn is_direct(self) -> bool {
        matches!(
            self,
            ProbeKind::MembershipDirect | ProbeKind::IntensityDirect
        )
    }
}

/// `"all"` or an explicit list of 1-based layers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Layers {
    #[default]
    #[serde(with = "all_literal")]
    All,
    List(Vec<usize>),
}

mod all_literal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("all")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "all" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!(
                "expected \"all\" or a list of layers, found {s:?}"
            )))
        }
    }
}

impl Layers {
    pub fn as_option(&self) -> Option<&[usize]> {
        match self {
            Layers::All => None,
            Layers::List(v) => Some(v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Orthogonal lexicon vectors built from the loaded scales: every scale
    /// gets its own axis and intensity grows along a shared axis.
    IdentityMock,
    /// Minimal-pair scorer that prefers the gold order by construction.
    ConstructionScorer,
    /// Masked LM assigning probability `p` to every original token.
    UniformMlm,
    /// Fixed next-word distribution for every prompt.
    FixedDistribution,
    StaticVectors,
    NgramTable,
    /// A child process speaking the JSON-lines backend protocol.
    Process,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Program and arguments of a process backend. Arguments starting with
    /// `./` or `../` are relative to the config file.
    #[serde(default)]
    pub command: Vec<String>,
    /// Layer count of the identity mock.
    #[serde(default)]
    pub layers: Option<usize>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub distribution: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSource {
    pub id: String,
    pub scales: PathBuf,
    #[serde(default)]
    pub contexts: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiSource {
    pub id: String,
    pub path: PathBuf,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifestMode {
    /// Check published datasets against their known counts.
    #[default]
    Auto,
    Skip,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub eval: Option<ScaleSource>,
    #[serde(default)]
    pub dvec_source: Option<ScaleSource>,
    /// Other scale datasets, used for held-out template selection.
    #[serde(default)]
    pub extra: Vec<ScaleSource>,
    #[serde(default)]
    pub si: Option<SiSource>,
    #[serde(default)]
    pub si_train: Vec<SiSource>,
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub manifest: ManifestMode,
}

fn default_shuffles() -> usize {
    10
}

fn default_epsilon() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectConfig {
    #[serde(default)]
    pub pooling: PoolingMode,
    #[serde(default)]
    pub variant: MembershipVariant,
    /// Representation mode for membership runs.
    #[serde(default = "default_representation")]
    pub representation: RepresentationMode,
    /// Intensity mode: shuffle-bind (`ours`) or shared contexts (`g-and-a`).
    #[serde(default)]
    pub mode: IntensityMode,
    #[serde(default = "default_shuffles")]
    pub num_shuffles: usize,
    /// Context sentences per adjective per run; defaults to 1, or 10 in
    /// `g-and-a` mode.
    #[serde(default)]
    pub contexts_per_run: Option<usize>,
    /// Cosine ties closer than this share a tie-group.
    #[serde(default)]
    pub tie_epsilon: f64,
}

fn default_representation() -> RepresentationMode {
    RepresentationMode::InContext
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            pooling: PoolingMode::Mean,
            variant: MembershipVariant::EndpointsSum,
            representation: default_representation(),
            mode: IntensityMode::Ours,
            num_shuffles: default_shuffles(),
            contexts_per_run: None,
            tie_epsilon: 0.0,
        }
    }
}

impl DirectConfig {
    pub fn contexts_per_run(&self, mode: IntensityMode) -> usize {
        self.contexts_per_run.unwrap_or(match mode {
            IntensityMode::Ours => 1,
            IntensityMode::GA => 10,
        })
    }
}

/// Template choice for indirect probes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemplateChoice {
    #[default]
    #[serde(with = "in_dataset_literal")]
    InDataset,
    #[serde(with = "held_out_literal")]
    HeldOut,
    Fixed(u32),
}

macro_rules! literal {
    ($name:ident, $text:literal) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str($text)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
                let s = String::deserialize(d)?;
                if s == $text {
                    Ok(())
                } else {
                    Err(serde::de::Error::custom(format!("expected {:?}", $text)))
                }
            }
        }
    };
}

literal!(in_dataset_literal, "in-dataset");
literal!(held_out_literal, "held-out");

fn default_k() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndirectConfig {
    #[serde(default)]
    pub template: TemplateChoice,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_epsilon")]
    pub tie_epsilon: f64,
}

impl Default for IndirectConfig {
    fn default() -> Self {
        Self {
            template: TemplateChoice::InDataset,
            k: default_k(),
            tie_epsilon: default_epsilon(),
        }
    }
}

/// One strategy, or every strategy from one scoring pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyChoice {
    Sy,
    Wy,
    Cy,
    #[default]
    All,
}

impl StrategyChoice {
    pub fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyChoice::Sy => vec![Strategy::Sy],
            StrategyChoice::Wy => vec![Strategy::Wy],
            StrategyChoice::Cy => vec![Strategy::Cy],
            StrategyChoice::All => Strategy::ALL.to_vec(),
        }
    }
}

fn default_c() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiversityConfig {
    #[serde(default)]
    pub strategy: StrategyChoice,
    /// Inverse L2 strength of the logistic regression baseline.
    #[serde(default = "default_c")]
    pub lr_c: f64,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        Self {
            strategy: StrategyChoice::All,
            lr_c: default_c(),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_output() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub probe: ProbeKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub layers: Layers,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads for concurrent backends; defaults to the core count.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Not needed by `lr-baseline`, which reads features from the data.
    #[serde(default)]
    pub backend: Option<BackendConfig>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub direct: DirectConfig,
    #[serde(default)]
    pub indirect: IndirectConfig,
    #[serde(default)]
    pub diversity: DiversityConfig,
}

/// Parses `key.path=value`. The value is read as a TOML value when it
/// parses as one, otherwise as a bare string.
pub fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(Error::Config(format!(
            "override {spec:?} has an empty key segment"
        )));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn apply_override(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("nonempty override path");
    let mut table = root;
    for (i, seg) in parents.iter().enumerate() {
        let entry = table
            .entry(seg.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            Error::Config(format!(
                "{}: not a table, cannot override a field inside it",
                parents[..=i].join(".")
            ))
        })?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML text, applies overrides and validates. Relative paths
    /// are resolved against `base_dir`.
    pub fn from_toml(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        for spec in overrides {
            let (path, value) = parse_override(spec)?;
            apply_override(&mut table, &path, value)?;
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        let mut config: ExperimentConfig = toml::from_str(&text).map_err(|e| {
            let msg = e.message().to_string();
            Error::Config(msg)
        })?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, overrides, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = &mut self.cache_dir {
            fix(p);
        }
        if let Some(b) = self.backend.as_mut() {
            if let Some(p) = &mut b.path {
                fix(p);
            }
            // Script paths in a process command, written relative to the config.
            for arg in &mut b.command {
                if arg.starts_with("./") || arg.starts_with("../") {
                    *arg = base.join(&*arg).to_string_lossy().into_owned();
                }
            }
        }
        let d = &mut self.data;
        for s in d
            .eval
            .iter_mut()
            .chain(d.dvec_source.iter_mut())
            .chain(d.extra.iter_mut())
        {
            fix(&mut s.scales);
            if let Some(c) = &mut s.contexts {
                fix(c);
            }
        }
        for s in d.si.iter_mut().chain(d.si_train.iter_mut()) {
            fix(&mut s.path);
        }
        if let Some(p) = &mut d.templates {
            fix(p);
        }
    }

    /// Checks the probe-specific required fields. Messages name the field.
    pub fn validate(&self) -> Result<()> {
        let probe = self.probe.as_str();
        let fail = |field: &str, msg: &str| Err(Error::Config(format!("{field}: {msg}")));
        let need = |present: bool, field: &str| {
            if present {
                Ok(())
            } else {
                fail(field, &format!("required for probe {probe}"))
            }
        };
        if self.probe.is_direct() && self.seeds.is_empty() {
            return fail("seeds", "must be nonempty for direct probes");
        }
        if let Layers::List(l) = &self.layers {
            if l.is_empty() || l.contains(&0) {
                return fail(
                    "layers",
                    "expected \"all\" or a nonempty list of layers counted from 1",
                );
            }
        }
        if self.workers == Some(0) {
            return fail("workers", "must be at least 1");
        }
        self.validate_backend()?;
        let data = &self.data;
        match self.probe {
            ProbeKind::MembershipDirect => {
                need(data.eval.is_some(), "data.eval")?;
                if self.direct.representation == RepresentationMode::InContext {
                    need(
                        data.eval.as_ref().is_some_and(|e| e.contexts.is_some()),
                        "data.eval.contexts",
                    )?;
                }
            }
            ProbeKind::IntensityDirect => {
                need(data.eval.is_some(), "data.eval")?;
                need(data.dvec_source.is_some(), "data.dvec_source")?;
                let (eval, source) = (
                    data.eval.as_ref().unwrap(),
                    data.dvec_source.as_ref().unwrap(),
                );
                if eval.id == source.id {
                    return fail(
                        "data.dvec_source.id",
                        "must differ from the evaluated dataset",
                    );
                }
                if self.direct.mode == IntensityMode::GA {
                    need(eval.contexts.is_some(), "data.eval.contexts")?;
                    need(source.contexts.is_some(), "data.dvec_source.contexts")?;
                }
                if self.direct.num_shuffles == 0 {
                    return fail("direct.num_shuffles", "must be at least 1");
                }
            }
            ProbeKind::MembershipIndirect | ProbeKind::IntensityIndirect => {
                need(data.eval.is_some(), "data.eval")?;
                if self.indirect.template == TemplateChoice::HeldOut {
                    need(!data.extra.is_empty(), "data.extra")?;
                }
                if !(self.indirect.tie_epsilon >= 0.0) {
                    return fail("indirect.tie_epsilon", "must be nonnegative");
                }
                if self.indirect.k == 0 {
                    return fail("indirect.k", "must be at least 1");
                }
            }
            ProbeKind::Diversity => need(data.si.is_some(), "data.si")?,
            ProbeKind::LrBaseline => {
                need(data.si.is_some(), "data.si")?;
                need(!data.si_train.is_empty(), "data.si_train")?;
                if !(self.diversity.lr_c > 0.0) {
                    return fail("diversity.lr_c", "must be positive");
                }
            }
        }
        if let Some(c) = self.direct.contexts_per_run {
            if !(1..=10).contains(&c) {
                return fail("direct.contexts_per_run", "must be between 1 and 10");
            }
        }
        Ok(())
    }

    fn validate_backend(&self) -> Result<()> {
        let Some(b) = &self.backend else {
            if self.probe == ProbeKind::LrBaseline {
                return Ok(());
            }
            return Err(Error::Config(format!(
                "backend: required for probe {}",
                self.probe.as_str()
            )));
        };
        let fail = |field: &str, msg: &str| Err(Error::Config(format!("backend.{field}: {msg}")));
        match b.kind {
            BackendKind::StaticVectors | BackendKind::NgramTable if b.path.is_none() => {
                fail("path", "required for this backend kind")
            }
            BackendKind::Process if b.command.is_empty() => {
                fail("command", "required for process backends")
            }
            BackendKind::UniformMlm if !b.p.is_some_and(|p| p > 0.0 && p <= 1.0) => {
                fail("p", "required, in (0, 1]")
            }
            BackendKind::FixedDistribution if b.distribution.is_empty() => {
                fail("distribution", "required for fixed-distribution backends")
            }
            BackendKind::IdentityMock if b.layers == Some(0) => {
                fail("layers", "must be at least 1")
            }
            _ => Ok(()),
        }
    }

    /// Hex SHA-256 of the canonical JSON form; names the run directory.
    /// Output location, cache location and worker count do not affect
    /// results and are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.cache_dir = None;
        c.workers = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Cache directory, with the environment override taking precedence.
    pub fn effective_cache_dir(&self) -> Option<PathBuf> {
        std::env::var_os(CACHE_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| self.cache_dir.clone())
    }
}
