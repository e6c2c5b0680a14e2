//! Evaluation metrics: mean reciprocal rank, pairwise accuracy, tie-aware
//! Kendall tau-b and Spearman rho, macro-F1, and seed aggregation.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Relation;
use crate::error::ProbeError;

/// Mean reciprocal rank of 1-based ranks.
pub fn mrr(ranks: &[usize]) -> Result<f64, ProbeError> {
    if ranks.is_empty() {
        return Err(ProbeError::Empty("mrr"));
    }
    if ranks.contains(&0) {
        return Err(ProbeError::Config("ranks are 1-based".into()));
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Predicted relation of a pair whose first member is the gold-weaker one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PredictedRelation {
    #[cfg_attr(feature = "serde", serde(rename = "<"))]
    Weaker,
    #[cfg_attr(feature = "serde", serde(rename = ">"))]
    Stronger,
    #[cfg_attr(feature = "serde", serde(rename = "="))]
    Tie,
}

impl PredictedRelation {
    /// Relation of `a` to `b` from intensity scores (higher is stronger).
    pub fn from_scores(a: f64, b: f64) -> Self {
        if a < b {
            PredictedRelation::Weaker
        } else if a > b {
            PredictedRelation::Stronger
        } else {
            PredictedRelation::Tie
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            PredictedRelation::Weaker => PredictedRelation::Stronger,
            PredictedRelation::Stronger => PredictedRelation::Weaker,
            PredictedRelation::Tie => PredictedRelation::Tie,
        }
    }

    pub fn matches(self, gold: Relation) -> bool {
        matches!(
            (gold, self),
            (Relation::Weaker, PredictedRelation::Weaker)
                | (Relation::Equal, PredictedRelation::Tie)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankingPairOutcome {
    pub gold: Relation,
    pub predicted: PredictedRelation,
    pub correct: bool,
}

impl RankingPairOutcome {
    pub fn new(gold: Relation, predicted: PredictedRelation) -> Self {
        Self {
            gold,
            predicted,
            correct: predicted.matches(gold),
        }
    }
}

/// Outcomes for every unordered pair of one scale, from gold levels and
/// predicted intensity scores indexed alike (higher is stronger in both).
/// Each pair is oriented so that its first member is the gold-weaker one.
pub fn pair_outcomes(
    gold: &[f64],
    predicted: &[f64],
) -> Result<Vec<RankingPairOutcome>, ProbeError> {
    if gold.len() != predicted.len() {
        return Err(ProbeError::LengthMismatch {
            left: gold.len(),
            right: predicted.len(),
        });
    }
    let mut out = Vec::with_capacity(gold.len() * gold.len().saturating_sub(1) / 2);
    for i in 0..gold.len() {
        for j in i + 1..gold.len() {
            let (a, b) = if gold[i] <= gold[j] { (i, j) } else { (j, i) };
            let relation = if gold[a] == gold[b] {
                Relation::Equal
            } else {
                Relation::Weaker
            };
            out.push(RankingPairOutcome::new(
                relation,
                PredictedRelation::from_scores(predicted[a], predicted[b]),
            ));
        }
    }
    Ok(out)
}

/// Fraction of correct outcomes, pooled.
pub fn pairwise_accuracy(outcomes: &[RankingPairOutcome]) -> Result<f64, ProbeError> {
    if outcomes.is_empty() {
        return Err(ProbeError::Empty("pairwise_accuracy"));
    }
    Ok(outcomes.iter().filter(|o| o.correct).count() as f64 / outcomes.len() as f64)
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort counting strict inversions.
fn sort_counting_swaps(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid]) + sort_counting_swaps(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// Kendall tau-b by Knight's sorting method. `None` when either ranking is
/// constant or there are fewer than two items.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n * (n - 1) / 2) as u64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tie_pairs(&xs);
    let mut n3 = 0u64;
    let mut run = 1u64;
    for w in pairs.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            n3 += run * (run - 1) / 2;
            run = 1;
        }
    }
    n3 += run * (run - 1) / 2;

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = sort_counting_swaps(&mut ys);
    let n2 = tie_pairs(&ys);
    if n1 == n0 || n2 == n0 {
        return None;
    }
    // concordant - discordant
    let num = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    Some(num as f64 / libm::sqrt((n0 - n1) as f64 * (n0 - n2) as f64))
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation, `None` if either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / libm::sqrt(sxx * syy))
}

/// Spearman rho: Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationReport {
    pub tau: f64,
    pub rho: f64,
    /// Scales contributing to the means.
    pub scales: usize,
    /// Scales skipped because a ranking was constant.
    pub excluded: usize,
}

/// Per-scale tau-b and rho, averaged over the scales where both are defined.
pub fn rank_correlations<'a, I>(scales: I) -> Result<CorrelationReport, ProbeError>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let (mut tau, mut rho, mut used, mut excluded) = (0.0, 0.0, 0usize, 0usize);
    for (gold, predicted) in scales {
        if gold.len() != predicted.len() {
            return Err(ProbeError::LengthMismatch {
                left: gold.len(),
                right: predicted.len(),
            });
        }
        match (
            kendall_tau_b(gold, predicted),
            spearman_rho(gold, predicted),
        ) {
            (Some(t), Some(r)) => {
                tau += t;
                rho += r;
                used += 1;
            }
            _ => excluded += 1,
        }
    }
    if used == 0 {
        return Err(ProbeError::AllExcluded);
    }
    Ok(CorrelationReport {
        tau: tau / used as f64,
        rho: rho / used as f64,
        scales: used,
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MacroF1 {
    pub value: f64,
    pub f1_yes: f64,
    pub f1_no: f64,
    /// Classes absent from both gold and predictions; their F1 counts as 0.
    pub absent_yes: bool,
    pub absent_no: bool,
}

fn class_f1(tp: usize, fp: usize, fn_: usize) -> (f64, bool) {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        (0.0, true)
    } else {
        (2.0 * tp as f64 / denom as f64, false)
    }
}

/// Unweighted mean of the yes-class and no-class F1.
pub fn macro_f1(gold: &[bool], predicted: &[bool]) -> Result<MacroF1, ProbeError> {
    if gold.len() != predicted.len() {
        return Err(ProbeError::LengthMismatch {
            left: gold.len(),
            right: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Err(ProbeError::Empty("macro_f1"));
    }
    let (mut tt, mut tf, mut ft, mut ff) = (0, 0, 0, 0);
    for (&g, &p) in gold.iter().zip(predicted) {
        match (g, p) {
            (true, true) => tt += 1,
            (true, false) => tf += 1,
            (false, true) => ft += 1,
            (false, false) => ff += 1,
        }
    }
    let (f1_yes, absent_yes) = class_f1(tt, ft, tf);
    let (f1_no, absent_no) = class_f1(ff, tf, ft);
    Ok(MacroF1 {
        value: (f1_yes + f1_no) / 2.0,
        f1_yes,
        f1_no,
        absent_yes,
        absent_no,
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, libm::sqrt(var)))
}
