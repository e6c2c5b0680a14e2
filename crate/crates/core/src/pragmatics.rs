//! Scalar-diversity probe: yes/no answer probabilities for implicature
//! prompts, neutral-context calibration, and the surprisal-feature logistic
//! regression baseline.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::Backend;
use crate::corpus::{SiDataset, SiItem};
use crate::error::{BackendError, ProbeError};
use crate::logistic::{LogisticModel, LogisticOptions, FEATURES};
use crate::metrics::{self, MacroF1};

/// Neutral fillers for the two prompt slots.
pub const NEUTRAL_FILLERS: [&str; 3] = ["[N/A]", "", "[MASK]"];

pub const ANSWERS: [&str; 2] = ["yes", "no"];

/// Position marker for the strong word in surprisal contexts.
pub const STRONG_MARKER: &str = "{STRONG}";

/// The fixed question prompt with both slots filled.
pub fn prompt_text(utterance: &str, predicate: &str) -> String {
    alloc::format!(
        "Question:Imagine that your friend Mary says, \"{utterance}\"\nWould you conclude from this that Mary thinks {predicate}?\nOnly answer yes or no.\nAnswer:"
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiversityPrompt {
    pub item_id: String,
    pub text: String,
}

pub fn build_prompt(item: &SiItem) -> DiversityPrompt {
    DiversityPrompt {
        item_id: item.item_id.clone(),
        text: prompt_text(&item.utterance, &item.question_predicate),
    }
}

/// The six neutral prompts: every ordered pair of distinct fillers over the
/// (utterance, predicate) slots.
pub fn neutral_prompts() -> Vec<DiversityPrompt> {
    let mut out = Vec::with_capacity(6);
    for (i, u) in NEUTRAL_FILLERS.iter().enumerate() {
        for (j, p) in NEUTRAL_FILLERS.iter().enumerate() {
            if i != j {
                out.push(DiversityPrompt {
                    item_id: alloc::format!("neutral-{i}{j}"),
                    text: prompt_text(u, p),
                });
            }
        }
    }
    out
}

/// Normalized yes probability `sy / (sy + sn)`.
pub fn compute_wy(sy: f64, sn: f64) -> Result<f64, ProbeError> {
    if !(sy >= 0.0 && sn >= 0.0) {
        return Err(ProbeError::Config(alloc::format!(
            "negative answer probability ({sy}, {sn})"
        )));
    }
    let mass = sy + sn;
    if mass <= 0.0 {
        return Err(ProbeError::ZeroAnswerMass);
    }
    Ok(sy / mass)
}

/// Neutral-context calibration: `W = diag(0.5 / mean_wy, 0.5 / (1 - mean_wy))`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationState {
    pub mean_wy: f64,
    pub weights: [f64; 2],
    pub neutral_wy: Vec<f64>,
}

impl CalibrationState {
    pub fn from_neutral(neutral_wy: Vec<f64>) -> Result<Self, ProbeError> {
        let (mean_wy, _) =
            metrics::mean_std(&neutral_wy).ok_or(ProbeError::Empty("neutral prompts"))?;
        if !(mean_wy > 0.0 && mean_wy < 1.0) {
            return Err(ProbeError::DegenerateCalibration(mean_wy));
        }
        Ok(Self {
            mean_wy,
            weights: [0.5 / mean_wy, 0.5 / (1.0 - mean_wy)],
            neutral_wy,
        })
    }

    /// Renormalized first component of `W [wy, 1 - wy]`.
    pub fn calibrate(&self, wy: f64) -> f64 {
        compute_cy(wy, self.mean_wy)
    }
}

/// `(wy / m) / (wy / m + (1 - wy) / (1 - m))` for mean neutral yes-probability
/// `m`.
pub fn compute_cy(wy: f64, mean_wy: f64) -> f64 {
    let a = wy / mean_wy;
    let b = (1.0 - wy) / (1.0 - mean_wy);
    a / (a + b)
}

/// Raw yes and no probabilities for a prompt.
pub fn answer_pair(backend: &dyn Backend, prompt: &str) -> Result<(f64, f64), BackendError> {
    let probs = backend.answer_probabilities(prompt, &ANSWERS)?;
    Ok((
        probs.get("yes").copied().unwrap_or(0.0),
        probs.get("no").copied().unwrap_or(0.0),
    ))
}

pub fn fit_calibration(backend: &dyn Backend) -> Result<CalibrationState, ProbeError> {
    let wy = neutral_prompts()
        .iter()
        .map(|p| {
            let (sy, sn) = answer_pair(backend, &p.text)?;
            compute_wy(sy, sn)
        })
        .collect::<Result<Vec<_>, _>>()?;
    CalibrationState::from_neutral(wy)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Strategy {
    #[default]
    Sy,
    Wy,
    Cy,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Sy, Strategy::Wy, Strategy::Cy];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Sy => "sy",
            Strategy::Wy => "wy",
            Strategy::Cy => "cy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrategyResult {
    pub item_id: String,
    pub gold: bool,
    pub sy: f64,
    pub sn: f64,
    /// `None` when yes and no both have zero probability.
    pub wy: Option<f64>,
    pub cy: Option<f64>,
    pub decision: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiversityResult {
    pub dataset_id: String,
    pub strategy: Strategy,
    pub calibration: Option<CalibrationState>,
    pub items: Vec<StrategyResult>,
    /// Items excluded from scoring because the strategy's probability was
    /// undefined.
    pub flagged: Vec<String>,
    pub f1: MacroF1,
}

/// Scores every item's raw answer probabilities.
pub fn score_items(
    backend: &dyn Backend,
    dataset: &SiDataset,
) -> Result<Vec<(String, bool, f64, f64)>, ProbeError> {
    dataset
        .items()
        .iter()
        .map(|item| {
            let (sy, sn) = answer_pair(backend, &build_prompt(item).text)?;
            Ok((item.item_id.clone(), item.gold_label, sy, sn))
        })
        .collect()
}

/// Decisions and macro-F1 for one strategy from raw `(id, gold, sy, sn)`
/// scores. `calibration` is required for `cy`.
pub fn decide(
    dataset_id: &str,
    raw: &[(String, bool, f64, f64)],
    strategy: Strategy,
    calibration: Option<CalibrationState>,
) -> Result<DiversityResult, ProbeError> {
    if strategy == Strategy::Cy && calibration.is_none() {
        return Err(ProbeError::Config(
            "strategy cy needs a fitted calibration".to_string(),
        ));
    }
    let mut items = Vec::with_capacity(raw.len());
    let mut flagged = Vec::new();
    for (id, gold, sy, sn) in raw {
        let wy = compute_wy(*sy, *sn).ok();
        let cy = match (&calibration, wy) {
            (Some(c), Some(w)) => Some(c.calibrate(w)),
            _ => None,
        };
        let p = match strategy {
            Strategy::Sy => Some(*sy),
            Strategy::Wy => wy,
            Strategy::Cy => cy,
        };
        match p {
            Some(p) => items.push(StrategyResult {
                item_id: id.clone(),
                gold: *gold,
                sy: *sy,
                sn: *sn,
                wy,
                cy,
                decision: p >= 0.5,
            }),
            None => flagged.push(id.clone()),
        }
    }
    let gold: Vec<bool> = items.iter().map(|i| i.gold).collect();
    let pred: Vec<bool> = items.iter().map(|i| i.decision).collect();
    let f1 = metrics::macro_f1(&gold, &pred)?;
    Ok(DiversityResult {
        dataset_id: dataset_id.to_string(),
        strategy,
        calibration,
        items,
        flagged,
        f1,
    })
}

/// Full diversity probe for one strategy. For `cy` the calibration is fitted
/// on the backend unless one is supplied.
pub fn run_diversity(
    backend: &dyn Backend,
    dataset: &SiDataset,
    strategy: Strategy,
    calibration: Option<CalibrationState>,
) -> Result<DiversityResult, ProbeError> {
    let calibration = match (strategy, calibration) {
        (Strategy::Cy, None) => Some(fit_calibration(backend)?),
        (_, c) => c,
    };
    let raw = score_items(backend, dataset)?;
    decide(dataset.id(), &raw, strategy, calibration)
}

/// `-ln P(strong | context prefix)`, where the prefix is the context up to
/// the strong-word marker.
pub fn string_surprisal(
    backend: &dyn Backend,
    item: &SiItem,
    context: &str,
) -> Result<f64, ProbeError> {
    let (prefix, _) = context.split_once(STRONG_MARKER).ok_or_else(|| {
        ProbeError::Config(alloc::format!("context lacks the {STRONG_MARKER} marker"))
    })?;
    let word = item.strong_adj.as_str();
    let probs = backend.answer_probabilities(prefix.trim_end(), &[word])?;
    let p = probs.get(word).copied().unwrap_or(0.0);
    if p <= 0.0 {
        return Err(ProbeError::ZeroAnswerMass);
    }
    Ok(-libm::log(p))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LrResult {
    pub train_datasets: Vec<String>,
    pub eval_dataset: String,
    pub dropped_train: usize,
    pub dropped_eval: usize,
    pub model: LogisticModel,
    pub f1: MacroF1,
    pub warnings: Vec<String>,
}

fn featurized(items: &[SiItem]) -> (Vec<[f64; FEATURES]>, Vec<bool>, usize) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut dropped = 0;
    for item in items {
        match item.features {
            Some(f) => {
                x.push([f.string_surprisal, f.concept_surprisal]);
                y.push(item.gold_label);
            }
            None => dropped += 1,
        }
    }
    (x, y, dropped)
}

/// Trains on the union of `train` and evaluates on `eval`. Items lacking
/// surprisal features are dropped on both sides.
pub fn lr_baseline(
    train: &[&SiDataset],
    eval: &SiDataset,
    opts: &LogisticOptions,
) -> Result<LrResult, ProbeError> {
    let train_items: Vec<SiItem> = train
        .iter()
        .flat_map(|d| d.items().iter().cloned())
        .collect();
    let (x, y, dropped_train) = featurized(&train_items);
    let (model, mut warnings) = LogisticModel::fit(&x, &y, opts)?;
    let (ex, ey, dropped_eval) = featurized(eval.items());
    let pred: Vec<bool> = ex.iter().map(|r| model.predict(r)).collect();
    let f1 = metrics::macro_f1(&ey, &pred)?;
    if dropped_train > 0 {
        warnings.push(alloc::format!(
            "dropped {dropped_train} training items without features"
        ));
    }
    if dropped_eval > 0 {
        warnings.push(alloc::format!(
            "dropped {dropped_eval} evaluation items without features"
        ));
    }
    Ok(LrResult {
        train_datasets: train.iter().map(|d| d.id().to_string()).collect(),
        eval_dataset: eval.id().to_string(),
        dropped_train,
        dropped_eval,
        model,
        f1,
        warnings,
    })
}

/// Training configurations for evaluating on `eval_id`: each remaining
/// dataset alone, then all remaining together when there are several.
pub fn lr_configurations<'a>(datasets: &[&'a SiDataset], eval_id: &str) -> Vec<Vec<&'a SiDataset>> {
    let rest: Vec<&SiDataset> = datasets
        .iter()
        .copied()
        .filter(|d| d.id() != eval_id)
        .collect();
    let mut out: Vec<Vec<&SiDataset>> = rest.iter().map(|d| alloc::vec![*d]).collect();
    if rest.len() > 1 {
        out.push(rest);
    }
    out
}
