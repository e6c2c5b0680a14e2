//! Direct probes over contextual representations: scale membership by cosine
//! ranking against scale vectors, and intensity ranking against a global
//! intensity direction (dVec).
//!
//! Each probe has a pure core that takes precomputed representations (used by
//! the parallel runner) and a sequential driver that also computes them.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::Backend;
use crate::corpus::{Adjective, ContextSet, HalfScale, Relation, ScaleDataset};
use crate::error::{BackendError, ProbeError};
use crate::metrics::{self, PredictedRelation};
use crate::representations::{
    represent_in_context, represent_shuffle_bind, InContextOptions, PoolingMode, ScaleReps,
};
use crate::vector::{self, Vector};

/// How an adjective's representation is produced for one run.
#[derive(Clone, Copy, Debug)]
pub enum RepSpec<'a> {
    InContext {
        contexts: &'a BTreeMap<String, ContextSet>,
        options: InContextOptions,
    },
    ShuffleBind {
        pooling: PoolingMode,
        num_shuffles: usize,
    },
}

pub fn represent(
    backend: &dyn Backend,
    scale: &HalfScale,
    spec: &RepSpec<'_>,
    seed: u64,
) -> Result<ScaleReps, ProbeError> {
    match spec {
        RepSpec::InContext { contexts, options } => {
            let set = contexts
                .get(scale.id())
                .ok_or_else(|| ProbeError::MissingContexts(scale.id().to_string()))?;
            represent_in_context(backend, scale, set, options, seed)
        }
        RepSpec::ShuffleBind {
            pooling,
            num_shuffles,
        } => represent_shuffle_bind(backend, scale, *pooling, seed, *num_shuffles),
    }
}

/// A scale left out of a run, with the reason.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Skipped {
    pub scale_id: String,
    pub adjective: Option<String>,
    pub reason: String,
}

/// Representations for every representable scale of a dataset.
#[derive(Clone, Debug, Default)]
pub struct RepresentedDataset {
    pub reps: BTreeMap<String, ScaleReps>,
    pub skipped: Vec<Skipped>,
}

impl RepresentedDataset {
    /// Files one scale's outcome. Out-of-vocabulary words skip the scale;
    /// other failures propagate.
    pub fn push(
        &mut self,
        scale_id: &str,
        result: Result<ScaleReps, ProbeError>,
    ) -> Result<(), ProbeError> {
        match result {
            Ok(r) => {
                self.reps.insert(scale_id.to_string(), r);
                Ok(())
            }
            Err(ProbeError::Backend(BackendError::OutOfVocabulary(word))) => {
                self.skipped.push(Skipped {
                    scale_id: scale_id.to_string(),
                    adjective: Some(word),
                    reason: "out of vocabulary".to_string(),
                });
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

pub fn represent_dataset(
    backend: &dyn Backend,
    dataset: &ScaleDataset,
    spec: &RepSpec<'_>,
    seed: u64,
) -> Result<RepresentedDataset, ProbeError> {
    let mut out = RepresentedDataset::default();
    for scale in dataset.scales() {
        out.push(scale.id(), represent(backend, scale, spec, seed))?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum MembershipVariant {
    /// Rank scales by cosine to rep(mildest) + rep(extreme).
    #[default]
    EndpointsSum,
    /// Rank scales by mean cosine to their members.
    AllMembers,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleVector {
    pub scale_id: String,
    pub layer: usize,
    pub vector: Vector,
    pub construction: MembershipVariant,
}

/// Endpoint-sum scale vector at `layer`.
pub fn build_scale_vector(
    reps: &ScaleReps,
    scale: &HalfScale,
    layer: usize,
) -> Result<ScaleVector, ProbeError> {
    let mild = reps.require(layer, scale.mildest())?;
    let extreme = reps.require(layer, scale.extreme())?;
    Ok(ScaleVector {
        scale_id: scale.id().to_string(),
        layer,
        vector: vector::add(mild, extreme),
        construction: MembershipVariant::EndpointsSum,
    })
}

/// 1-based rank of a true score among competitor scores, descending, with
/// ties resolved to the worst rank. Undefined competitors never outrank.
pub fn worst_rank(true_score: f64, others: impl IntoIterator<Item = Option<f64>>) -> usize {
    1 + others
        .into_iter()
        .flatten()
        .filter(|&s| s >= true_score)
        .count()
}

/// Rank of the true scale for one adjective vector. `None` when the cosine to
/// the true scale is undefined.
pub fn rank_membership(
    adjective: &[f64],
    scale_vectors: &[ScaleVector],
    true_scale_id: &str,
) -> Option<usize> {
    let truth = scale_vectors.iter().find(|s| s.scale_id == true_scale_id)?;
    let true_score = vector::cosine(adjective, &truth.vector)?;
    Some(worst_rank(
        true_score,
        scale_vectors
            .iter()
            .filter(|s| s.scale_id != true_scale_id)
            .map(|s| vector::cosine(adjective, &s.vector)),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MembershipItem {
    pub scale_id: String,
    pub adjective: Adjective,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MembershipOutcome {
    pub layer: usize,
    pub items: Vec<MembershipItem>,
    pub flagged: Vec<Skipped>,
    pub mrr: f64,
}

fn mean_member_cosine<'a>(
    v: &[f64],
    members: impl Iterator<Item = (&'a Adjective, &'a Vector)>,
    skip: Option<&Adjective>,
) -> Option<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for (adj, m) in members {
        if Some(adj) == skip {
            continue;
        }
        if let Some(c) = vector::cosine(v, m) {
            total += c;
            n += 1;
        }
    }
    (n > 0).then(|| total / n as f64)
}

/// Membership ranks of every adjective occurrence at one layer. Scales
/// without representations are left out of both the items and the
/// candidates.
pub fn membership_from_reps(
    dataset: &ScaleDataset,
    reps: &BTreeMap<String, ScaleReps>,
    layer: usize,
    variant: MembershipVariant,
) -> Result<MembershipOutcome, ProbeError> {
    let scales: Vec<(&HalfScale, &ScaleReps)> = dataset
        .scales()
        .iter()
        .filter_map(|s| reps.get(s.id()).map(|r| (s, r)))
        .collect();
    let scale_vectors = match variant {
        MembershipVariant::EndpointsSum => scales
            .iter()
            .map(|(s, r)| build_scale_vector(r, s, layer))
            .collect::<Result<Vec<_>, _>>()?,
        MembershipVariant::AllMembers => Vec::new(),
    };
    let mut items = Vec::new();
    let mut flagged = Vec::new();
    for (scale, scale_reps) in &scales {
        for adjective in scale.adjectives() {
            let v = scale_reps.require(layer, adjective)?;
            let rank = match variant {
                MembershipVariant::EndpointsSum => rank_membership(v, &scale_vectors, scale.id()),
                MembershipVariant::AllMembers => {
                    let score = |s: &HalfScale, r: &ScaleReps| {
                        let members = s
                            .adjectives()
                            .filter_map(|a| r.get(layer, a).map(|m| (a, m)));
                        let skip = (s.id() == scale.id()).then_some(adjective);
                        mean_member_cosine(v, members, skip)
                    };
                    score(scale, scale_reps).map(|t| {
                        worst_rank(
                            t,
                            scales
                                .iter()
                                .filter(|(s, _)| s.id() != scale.id())
                                .map(|(s, r)| score(s, r)),
                        )
                    })
                }
            };
            match rank {
                Some(rank) => items.push(MembershipItem {
                    scale_id: scale.id().to_string(),
                    adjective: adjective.clone(),
                    rank,
                }),
                None => flagged.push(Skipped {
                    scale_id: scale.id().to_string(),
                    adjective: Some(adjective.to_string()),
                    reason: "cosine to own scale undefined".to_string(),
                }),
            }
        }
    }
    let ranks: Vec<usize> = items.iter().map(|i| i.rank).collect();
    let mrr = metrics::mrr(&ranks)?;
    Ok(MembershipOutcome {
        layer,
        items,
        flagged,
        mrr,
    })
}

/// Per-seed values of one metric at one layer, with their mean and
/// population standard deviation.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSummary {
    pub layer: usize,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl LayerSummary {
    pub fn new(layer: usize, per_seed: Vec<f64>) -> Result<Self, ProbeError> {
        let (mean, std) = metrics::mean_std(&per_seed).ok_or(ProbeError::Empty("seeds"))?;
        Ok(Self {
            layer,
            per_seed,
            mean,
            std,
        })
    }
}

/// Index of the summary with the highest mean; ties go to the earliest.
pub fn best_layer(summaries: &[LayerSummary]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in summaries.iter().enumerate() {
        match best {
            Some(b) if summaries[b].mean >= s.mean => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Resolves a layer selection against a backend's depth.
pub fn resolve_layers(
    requested: Option<&[usize]>,
    num_layers: usize,
) -> Result<Vec<usize>, ProbeError> {
    match requested {
        None => Ok((1..=num_layers).collect()),
        Some(list) => {
            if list.is_empty() {
                return Err(ProbeError::Config("layers: empty list".to_string()));
            }
            if let Some(bad) = list.iter().find(|&&l| l == 0 || l > num_layers) {
                return Err(ProbeError::Config(alloc::format!(
                    "layers: {bad} outside 1..={num_layers}"
                )));
            }
            Ok(list.to_vec())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MembershipReport {
    pub variant: MembershipVariant,
    pub layers: Vec<LayerSummary>,
    pub best: usize,
    /// Per-seed item outcomes at the best layer.
    pub best_outcomes: Vec<MembershipOutcome>,
    pub skipped: Vec<Skipped>,
}

impl MembershipReport {
    pub fn best_layer(&self) -> &LayerSummary {
        &self.layers[self.best]
    }
}

/// Assembles a report from per-seed outcomes, each holding one outcome per
/// layer in the same layer order.
pub fn membership_report(
    variant: MembershipVariant,
    per_seed: &[Vec<MembershipOutcome>],
    skipped: Vec<Skipped>,
) -> Result<MembershipReport, ProbeError> {
    let first = per_seed.first().ok_or(ProbeError::Empty("seeds"))?;
    let layers = (0..first.len())
        .map(|i| LayerSummary::new(first[i].layer, per_seed.iter().map(|s| s[i].mrr).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    let best = best_layer(&layers).ok_or(ProbeError::Empty("layers"))?;
    Ok(MembershipReport {
        variant,
        layers,
        best,
        best_outcomes: per_seed.iter().map(|s| s[best].clone()).collect(),
        skipped,
    })
}

/// Sequential membership probe over seeds and layers (`None` = all layers).
pub fn membership_mrr(
    backend: &dyn Backend,
    dataset: &ScaleDataset,
    spec: &RepSpec<'_>,
    seeds: &[u64],
    layers: Option<&[usize]>,
    variant: MembershipVariant,
) -> Result<MembershipReport, ProbeError> {
    let layers = resolve_layers(layers, backend.descriptor().num_layers)?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut skipped = Vec::new();
    for &seed in seeds {
        let rd = represent_dataset(backend, dataset, spec, seed)?;
        let outcomes = layers
            .iter()
            .map(|&l| membership_from_reps(dataset, &rd.reps, l, variant))
            .collect::<Result<Vec<_>, _>>()?;
        per_seed.push(outcomes);
        if skipped.is_empty() {
            skipped = rd.skipped;
        }
    }
    membership_report(variant, &per_seed, skipped)
}

/// The global intensity direction at one layer.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntensityVector {
    pub source_dataset: String,
    pub excluded_dataset: String,
    pub layer: usize,
    pub vector: Vector,
    pub scales: usize,
}

/// Mean of rep(extreme) − rep(mildest) over the source dataset's represented
/// scales. The source must differ from the evaluated dataset.
pub fn build_dvec(
    source: &ScaleDataset,
    reps: &BTreeMap<String, ScaleReps>,
    excluded: &str,
    layer: usize,
) -> Result<IntensityVector, ProbeError> {
    if source.id() == excluded {
        return Err(ProbeError::Config(alloc::format!(
            "dvec source {:?} is the evaluated dataset",
            source.id()
        )));
    }
    let mut diffs = Vec::new();
    for scale in source.scales() {
        let Some(r) = reps.get(scale.id()) else {
            continue;
        };
        diffs.push(vector::sub(
            r.require(layer, scale.extreme())?,
            r.require(layer, scale.mildest())?,
        ));
    }
    let n = diffs.len();
    let vector =
        vector::mean(diffs.iter().map(Vec::as_slice)).ok_or(ProbeError::Empty("dvec source"))?;
    Ok(IntensityVector {
        source_dataset: source.id().to_string(),
        excluded_dataset: excluded.to_string(),
        layer,
        vector,
        scales: n,
    })
}

/// Predicted intensity order of one scale: tie-groups by descending cosine to
/// dVec, each member with its cosine.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntensityRanking {
    pub scale_id: String,
    pub groups: Vec<Vec<(Adjective, f64)>>,
}

impl IntensityRanking {
    /// Predicted intensity score per adjective (higher is stronger); members
    /// of one tie-group share a score.
    pub fn scores(&self) -> BTreeMap<&Adjective, f64> {
        let n = self.groups.len();
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(i, g)| g.iter().map(move |(a, _)| (a, (n - i) as f64)))
            .collect()
    }
}

/// Ranks a scale's adjectives by cosine to `dvec`. Adjacent cosines within
/// `epsilon` of a group's top member join that group (exact equality when 0).
pub fn rank_intensity(
    scale: &HalfScale,
    reps: &ScaleReps,
    layer: usize,
    dvec: &[f64],
    epsilon: f64,
) -> Result<IntensityRanking, ProbeError> {
    let mut scored = Vec::with_capacity(scale.len());
    for adjective in scale.adjectives() {
        let v = reps.require(layer, adjective)?;
        let c = vector::cosine(v, dvec).ok_or_else(|| ProbeError::ZeroVector {
            scale_id: scale.id().to_string(),
            adjective: adjective.to_string(),
        })?;
        scored.push((adjective.clone(), c));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut groups: Vec<Vec<(Adjective, f64)>> = Vec::new();
    for (adj, c) in scored {
        match groups.last_mut() {
            Some(g) if g[0].1 - c <= epsilon => g.push((adj, c)),
            _ => groups.push(alloc::vec![(adj, c)]),
        }
    }
    Ok(IntensityRanking {
        scale_id: scale.id().to_string(),
        groups,
    })
}

/// One gold pair with its predicted relation.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredPair {
    pub first: Adjective,
    pub second: Adjective,
    pub gold: Relation,
    pub predicted: PredictedRelation,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleIntensity {
    pub scale_id: String,
    pub ranking: Vec<Vec<Adjective>>,
    pub pairs: Vec<ScoredPair>,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
}

/// Pairwise outcomes and correlations of a predicted ranking against gold.
pub fn score_ranking(
    scale: &HalfScale,
    ranking: &IntensityRanking,
) -> Result<ScaleIntensity, ProbeError> {
    let predicted = ranking.scores();
    let score = |a: &Adjective| {
        predicted
            .get(a)
            .copied()
            .ok_or_else(|| ProbeError::MissingRepresentation {
                scale_id: scale.id().to_string(),
                adjective: a.to_string(),
            })
    };
    let mut pairs = Vec::new();
    for pair in scale.pairs() {
        let rel = PredictedRelation::from_scores(score(&pair.first)?, score(&pair.second)?);
        pairs.push(ScoredPair {
            correct: rel.matches(pair.relation),
            first: pair.first,
            second: pair.second,
            gold: pair.relation,
            predicted: rel,
        });
    }
    let mut gold = Vec::with_capacity(scale.len());
    let mut pred = Vec::with_capacity(scale.len());
    for a in scale.adjectives() {
        gold.push(scale.level_of(a).unwrap_or(0) as f64);
        pred.push(score(a)?);
    }
    Ok(ScaleIntensity {
        scale_id: scale.id().to_string(),
        ranking: ranking
            .groups
            .iter()
            .map(|g| g.iter().map(|(a, _)| a.clone()).collect())
            .collect(),
        pairs,
        tau: metrics::kendall_tau_b(&gold, &pred),
        rho: metrics::spearman_rho(&gold, &pred),
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntensityOutcome {
    pub layer: usize,
    pub dvec_scales: usize,
    pub scales: Vec<ScaleIntensity>,
    pub flagged: Vec<Skipped>,
    pub pacc: f64,
    /// `None` when every scale had a constant ranking.
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    pub correlation_excluded: usize,
}

/// Intensity probe at one layer from precomputed representations.
pub fn intensity_from_reps(
    eval: &ScaleDataset,
    eval_reps: &BTreeMap<String, ScaleReps>,
    dvec: &IntensityVector,
    epsilon: f64,
) -> Result<IntensityOutcome, ProbeError> {
    let layer = dvec.layer;
    let mut scales = Vec::new();
    let mut flagged = Vec::new();
    for scale in eval.scales() {
        let Some(r) = eval_reps.get(scale.id()) else {
            continue;
        };
        match rank_intensity(scale, r, layer, &dvec.vector, epsilon) {
            Ok(ranking) => scales.push(score_ranking(scale, &ranking)?),
            Err(ProbeError::ZeroVector {
                scale_id,
                adjective,
            }) => flagged.push(Skipped {
                scale_id,
                adjective: Some(adjective),
                reason: "zero vector".to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let outcomes: Vec<metrics::RankingPairOutcome> = scales
        .iter()
        .flat_map(|s| {
            s.pairs
                .iter()
                .map(|p| metrics::RankingPairOutcome::new(p.gold, p.predicted))
        })
        .collect();
    let pacc = metrics::pairwise_accuracy(&outcomes)?;
    let used: Vec<(f64, f64)> = scales
        .iter()
        .filter_map(|s| Some((s.tau?, s.rho?)))
        .collect();
    let excluded = scales.len() - used.len();
    let (tau, rho) = if used.is_empty() {
        (None, None)
    } else {
        let n = used.len() as f64;
        (
            Some(used.iter().map(|u| u.0).sum::<f64>() / n),
            Some(used.iter().map(|u| u.1).sum::<f64>() / n),
        )
    };
    Ok(IntensityOutcome {
        layer,
        dvec_scales: dvec.scales,
        scales,
        flagged,
        pacc,
        tau,
        rho,
        correlation_excluded: excluded,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum IntensityMode {
    /// Shuffle-bind representations.
    #[default]
    Ours,
    /// In-context representations in shared per-scale contexts.
    #[cfg_attr(feature = "serde", serde(rename = "g-and-a"))]
    GA,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntensityLayerSummary {
    pub layer: usize,
    pub pacc: LayerSummary,
    pub tau: Option<LayerSummary>,
    pub rho: Option<LayerSummary>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntensityReport {
    pub mode: IntensityMode,
    pub eval_dataset: String,
    pub dvec_source: String,
    pub layers: Vec<IntensityLayerSummary>,
    /// Index into `layers` of the best mean pairwise accuracy.
    pub best: usize,
    /// Per-seed outcomes at the best layer.
    pub best_outcomes: Vec<IntensityOutcome>,
    pub skipped: Vec<Skipped>,
}

impl IntensityReport {
    pub fn best_layer(&self) -> &IntensityLayerSummary {
        &self.layers[self.best]
    }
}

fn optional_summary(
    layer: usize,
    values: Vec<Option<f64>>,
) -> Result<Option<LayerSummary>, ProbeError> {
    let present: Vec<f64> = values.into_iter().flatten().collect();
    if present.is_empty() {
        Ok(None)
    } else {
        LayerSummary::new(layer, present).map(Some)
    }
}

/// Aggregates per-seed outcomes (one per layer, same order in every seed).
pub fn intensity_report(
    mode: IntensityMode,
    eval_dataset: &str,
    dvec_source: &str,
    per_seed: &[Vec<IntensityOutcome>],
    skipped: Vec<Skipped>,
) -> Result<IntensityReport, ProbeError> {
    let first = per_seed.first().ok_or(ProbeError::Empty("seeds"))?;
    let mut layers = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let layer = first[i].layer;
        layers.push(IntensityLayerSummary {
            layer,
            pacc: LayerSummary::new(layer, per_seed.iter().map(|s| s[i].pacc).collect())?,
            tau: optional_summary(layer, per_seed.iter().map(|s| s[i].tau).collect())?,
            rho: optional_summary(layer, per_seed.iter().map(|s| s[i].rho).collect())?,
        });
    }
    let pacc: Vec<LayerSummary> = layers.iter().map(|l| l.pacc.clone()).collect();
    let best = best_layer(&pacc).ok_or(ProbeError::Empty("layers"))?;
    Ok(IntensityReport {
        mode,
        eval_dataset: eval_dataset.to_string(),
        dvec_source: dvec_source.to_string(),
        layers,
        best,
        best_outcomes: per_seed.iter().map(|s| s[best].clone()).collect(),
        skipped,
    })
}

/// Representation settings for an intensity run.
#[derive(Clone, Copy, Debug)]
pub struct IntensitySetup<'a> {
    pub mode: IntensityMode,
    pub pooling: PoolingMode,
    pub num_shuffles: usize,
    pub contexts_per_run: usize,
    pub eval_contexts: Option<&'a BTreeMap<String, ContextSet>>,
    pub source_contexts: Option<&'a BTreeMap<String, ContextSet>>,
    pub epsilon: f64,
}

impl<'a> IntensitySetup<'a> {
    /// Representation spec for the evaluated (`eval = true`) or source
    /// dataset.
    pub fn spec(&self, eval: bool) -> Result<RepSpec<'a>, ProbeError> {
        match self.mode {
            IntensityMode::Ours => Ok(RepSpec::ShuffleBind {
                pooling: self.pooling,
                num_shuffles: self.num_shuffles,
            }),
            IntensityMode::GA => {
                let contexts = if eval {
                    self.eval_contexts
                } else {
                    self.source_contexts
                };
                let contexts = contexts.ok_or_else(|| {
                    ProbeError::Config("g-and-a mode needs context sentences".to_string())
                })?;
                Ok(RepSpec::InContext {
                    contexts,
                    options: InContextOptions {
                        pooling: self.pooling,
                        contexts_per_run: self.contexts_per_run,
                        shared: true,
                    },
                })
            }
        }
    }
}

/// Sequential intensity probe over seeds and layers.
pub fn intensity_eval(
    backend: &dyn Backend,
    eval: &ScaleDataset,
    source: &ScaleDataset,
    setup: &IntensitySetup<'_>,
    seeds: &[u64],
    layers: Option<&[usize]>,
) -> Result<IntensityReport, ProbeError> {
    if source.id() == eval.id() {
        return Err(ProbeError::Config(alloc::format!(
            "dvec source {:?} is the evaluated dataset",
            source.id()
        )));
    }
    let layers = resolve_layers(layers, backend.descriptor().num_layers)?;
    let eval_spec = setup.spec(true)?;
    let source_spec = setup.spec(false)?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut skipped = Vec::new();
    for &seed in seeds {
        let er = represent_dataset(backend, eval, &eval_spec, seed)?;
        let sr = represent_dataset(backend, source, &source_spec, seed)?;
        let mut outcomes = Vec::with_capacity(layers.len());
        for &l in &layers {
            let dvec = build_dvec(source, &sr.reps, eval.id(), l)?;
            outcomes.push(intensity_from_reps(eval, &er.reps, &dvec, setup.epsilon)?);
        }
        per_seed.push(outcomes);
        if skipped.is_empty() {
            skipped = er.skipped.into_iter().chain(sr.skipped).collect();
        }
    }
    intensity_report(setup.mode, eval.id(), source.id(), &per_seed, skipped)
}
