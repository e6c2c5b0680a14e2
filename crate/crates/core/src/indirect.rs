//! Template probes: top-k completion for scale membership and minimal-pair
//! sequence scoring for intensity, with template selection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::{Backend, Candidate, Family, SequenceScore, MASK_TOKEN};
use crate::corpus::{Adjective, Relation, ScaleDataset};
use crate::error::{BackendError, ProbeError};
use crate::metrics::PredictedRelation;

pub const WEAK_SLOT: &str = "{WEAK}";
pub const STRONG_SLOT: &str = "{STRONG}";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum TemplateCategory {
    Membership,
    Intensity,
}

impl TemplateCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateCategory::Membership => "membership",
            TemplateCategory::Intensity => "intensity",
        }
    }
}

/// Surface order of the two slots in an intensity template.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum Direction {
    WeakStrong,
    StrongWeak,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::WeakStrong => "weak-strong",
            Direction::StrongWeak => "strong-weak",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Template {
    pub id: u32,
    pub category: TemplateCategory,
    pub direction: Direction,
    pub pattern: String,
}

impl Template {
    /// Validates that both slots occur exactly once and that the slot order
    /// agrees with `direction`.
    pub fn new(
        id: u32,
        category: TemplateCategory,
        direction: Direction,
        pattern: &str,
    ) -> Result<Self, ProbeError> {
        let bad =
            |why: &str| ProbeError::Config(alloc::format!("template {id}: {why}: {pattern:?}"));
        if pattern.matches(WEAK_SLOT).count() != 1 || pattern.matches(STRONG_SLOT).count() != 1 {
            return Err(bad("needs each slot exactly once"));
        }
        let weak_at = pattern.find(WEAK_SLOT).unwrap_or(0);
        let strong_at = pattern.find(STRONG_SLOT).unwrap_or(0);
        let actual = if weak_at < strong_at {
            Direction::WeakStrong
        } else {
            Direction::StrongWeak
        };
        if actual != direction {
            return Err(bad("slot order disagrees with direction"));
        }
        if category == TemplateCategory::Membership && direction != Direction::WeakStrong {
            return Err(bad("membership templates put the weak slot first"));
        }
        Ok(Self {
            id,
            category,
            direction,
            pattern: pattern.to_string(),
        })
    }

    /// Fills both slots.
    pub fn instantiate(&self, weak: &str, strong: &str) -> String {
        self.pattern
            .replace(WEAK_SLOT, weak)
            .replace(STRONG_SLOT, strong)
    }

    /// Text before the strong slot with the weak slot filled, trailing
    /// whitespace removed. Only meaningful for weak-strong templates.
    pub fn prefix(&self, weak: &str) -> String {
        let before = self.pattern.split(STRONG_SLOT).next().unwrap_or("");
        before.replace(WEAK_SLOT, weak).trim_end().to_string()
    }

    /// Masked-encoder completion input: the prefix followed by the mask and a
    /// comma.
    pub fn masked_input(&self, weak: &str) -> String {
        alloc::format!("{} {MASK_TOKEN},", self.prefix(weak))
    }
}

/// Lowercases and strips everything but letters, digits and hyphens.
pub fn normalize_candidate(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric() || *c == '-')
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompletionCase {
    pub scale_id: String,
    pub weak: Adjective,
    pub input: String,
    pub candidates: Vec<Candidate>,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompletionResult {
    pub template_id: u32,
    pub dataset_id: String,
    pub k: usize,
    pub cases: Vec<CompletionCase>,
    pub accuracy: f64,
}

/// Top-k candidates for the strong slot of `template` given `weak`.
pub fn complete(
    backend: &dyn Backend,
    template: &Template,
    weak: &str,
    k: usize,
) -> Result<(String, Vec<Candidate>), ProbeError> {
    let family = backend.descriptor().family;
    match family {
        Family::MaskedEncoder => {
            let input = template.masked_input(weak);
            let c = backend.fill_mask_topk(&input, k)?;
            Ok((input, c))
        }
        Family::Causal | Family::Seq2seq | Family::NgramTable => {
            let input = template.prefix(weak);
            let c = backend.topk_next_words(&input, k)?;
            Ok((input, c))
        }
        Family::StaticVector => Err(backend
            .descriptor()
            .unsupported("membership completion")
            .into()),
    }
}

/// Whether any candidate is a scale-mate of `weak` other than `weak` itself.
pub fn completion_correct(
    candidates: &[Candidate],
    weak: &Adjective,
    mates: &BTreeSet<&str>,
) -> bool {
    candidates.iter().any(|c| {
        let w = normalize_candidate(&c.word);
        w != weak.as_str() && mates.contains(w.as_str())
    })
}

/// Membership completion accuracy over every adjective outside its scale's
/// strongest group.
pub fn membership_completion(
    backend: &dyn Backend,
    dataset: &ScaleDataset,
    template: &Template,
    k: usize,
) -> Result<CompletionResult, ProbeError> {
    if template.category != TemplateCategory::Membership {
        return Err(ProbeError::Config(alloc::format!(
            "template {} is not a membership template",
            template.id
        )));
    }
    let mut cases = Vec::new();
    for scale in dataset.scales() {
        let mates: BTreeSet<&str> = scale.adjectives().map(Adjective::as_str).collect();
        for weak in scale.adjectives().filter(|a| !scale.in_strongest_group(a)) {
            let (input, candidates) = complete(backend, template, weak.as_str(), k)?;
            cases.push(CompletionCase {
                scale_id: scale.id().to_string(),
                weak: weak.clone(),
                correct: completion_correct(&candidates, weak, &mates),
                input,
                candidates,
            });
        }
    }
    if cases.is_empty() {
        return Err(ProbeError::Empty("membership completion cases"));
    }
    let accuracy = cases.iter().filter(|c| c.correct).count() as f64 / cases.len() as f64;
    Ok(CompletionResult {
        template_id: template.id,
        dataset_id: dataset.id().to_string(),
        k,
        cases,
        accuracy,
    })
}

/// Relation implied by the scores of the correct-order (weak in the weak
/// slot) and reversed instantiations. Equal values, or a relative difference
/// below `epsilon`, give a tie.
pub fn verdict(
    correct_order: &SequenceScore,
    reversed: &SequenceScore,
    epsilon: f64,
) -> PredictedRelation {
    let (a, b) = (correct_order.value(), reversed.value());
    let scale = a.abs().max(b.abs());
    if a == b || (scale > 0.0 && (a - b).abs() / scale < epsilon) {
        return PredictedRelation::Tie;
    }
    if correct_order.preference() > reversed.preference() {
        PredictedRelation::Weaker
    } else {
        PredictedRelation::Stronger
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairVerdict {
    pub scale_id: String,
    /// Gold-weaker (or first-listed, for ties) adjective.
    pub weak: Adjective,
    pub strong: Adjective,
    pub gold: Relation,
    pub predicted: PredictedRelation,
    /// Score with `weak` in the weak slot.
    pub score_weak_first: SequenceScore,
    /// Score with the adjectives swapped.
    pub score_swapped: SequenceScore,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinimalPairResult {
    pub template_id: u32,
    pub dataset_id: String,
    pub verdicts: Vec<PairVerdict>,
    pub accuracy: f64,
}

/// Scores one gold pair under `template`.
pub fn score_pair(
    backend: &dyn Backend,
    template: &Template,
    weak: &Adjective,
    strong: &Adjective,
    epsilon: f64,
) -> Result<(PredictedRelation, SequenceScore, SequenceScore), BackendError> {
    let a = backend.sequence_score(&template.instantiate(weak.as_str(), strong.as_str()))?;
    let b = backend.sequence_score(&template.instantiate(strong.as_str(), weak.as_str()))?;
    Ok((verdict(&a, &b, epsilon), a, b))
}

/// Pairwise accuracy of minimal-pair verdicts over every gold pair.
pub fn intensity_minimal_pair(
    backend: &dyn Backend,
    dataset: &ScaleDataset,
    template: &Template,
    epsilon: f64,
) -> Result<MinimalPairResult, ProbeError> {
    if template.category != TemplateCategory::Intensity {
        return Err(ProbeError::Config(alloc::format!(
            "template {} is not an intensity template",
            template.id
        )));
    }
    let mut verdicts = Vec::new();
    for scale in dataset.scales() {
        for pair in scale.pairs() {
            let (predicted, a, b) =
                score_pair(backend, template, &pair.first, &pair.second, epsilon)?;
            verdicts.push(PairVerdict {
                scale_id: scale.id().to_string(),
                correct: predicted.matches(pair.relation),
                weak: pair.first,
                strong: pair.second,
                gold: pair.relation,
                predicted,
                score_weak_first: a,
                score_swapped: b,
            });
        }
    }
    if verdicts.is_empty() {
        return Err(ProbeError::Empty("minimal pairs"));
    }
    let accuracy = verdicts.iter().filter(|v| v.correct).count() as f64 / verdicts.len() as f64;
    Ok(MinimalPairResult {
        template_id: template.id,
        dataset_id: dataset.id().to_string(),
        verdicts,
        accuracy,
    })
}

/// Per-template, per-dataset metric lookups for template selection.
pub trait MetricSource {
    fn template_ids(&self) -> Vec<u32>;
    fn dataset_ids(&self) -> Vec<String>;
    fn metric(&self, template_id: u32, dataset_id: &str) -> Option<f64>;
}

/// Metric table keyed by (template id, dataset id).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TemplateScores(pub BTreeMap<(u32, String), f64>);

impl TemplateScores {
    pub fn insert(&mut self, template_id: u32, dataset_id: &str, value: f64) {
        self.0.insert((template_id, dataset_id.to_string()), value);
    }
}

impl MetricSource for TemplateScores {
    fn template_ids(&self) -> Vec<u32> {
        let ids: BTreeSet<u32> = self.0.keys().map(|k| k.0).collect();
        ids.into_iter().collect()
    }

    fn dataset_ids(&self) -> Vec<String> {
        let ids: BTreeSet<&String> = self.0.keys().map(|k| &k.1).collect();
        ids.into_iter().cloned().collect()
    }

    fn metric(&self, template_id: u32, dataset_id: &str) -> Option<f64> {
        self.0.get(&(template_id, dataset_id.to_string())).copied()
    }
}

fn argmax_lowest_id(scored: impl Iterator<Item = (u32, f64)>) -> Option<u32> {
    let mut best: Option<(u32, f64)> = None;
    for (id, v) in scored {
        match best {
            Some((bid, bv)) if bv > v || (bv == v && bid < id) => {}
            _ => best = Some((id, v)),
        }
    }
    best.map(|b| b.0)
}

/// Template with the highest mean metric over every dataset except
/// `eval_dataset`; ties go to the lowest id. Templates missing a held-out
/// value are not eligible. The evaluated dataset's scores are never read.
pub fn select_template_heldout(
    source: &dyn MetricSource,
    eval_dataset: &str,
) -> Result<u32, ProbeError> {
    let held_out: Vec<String> = source
        .dataset_ids()
        .into_iter()
        .filter(|d| d != eval_dataset)
        .collect();
    if held_out.is_empty() {
        return Err(ProbeError::Config(alloc::format!(
            "no held-out dataset besides {eval_dataset:?}"
        )));
    }
    let scored = source.template_ids().into_iter().filter_map(|t| {
        let values: Option<Vec<f64>> = held_out.iter().map(|d| source.metric(t, d)).collect();
        let values = values?;
        Some((t, values.iter().sum::<f64>() / values.len() as f64))
    });
    argmax_lowest_id(scored).ok_or(ProbeError::Empty("template scores"))
}

/// Template with the highest metric on `eval_dataset` itself; ties go to the
/// lowest id.
pub fn best_template_in_dataset(
    source: &dyn MetricSource,
    eval_dataset: &str,
) -> Result<u32, ProbeError> {
    let scored = source
        .template_ids()
        .into_iter()
        .filter_map(|t| source.metric(t, eval_dataset).map(|v| (t, v)));
    argmax_lowest_id(scored).ok_or(ProbeError::Empty("template scores"))
}
