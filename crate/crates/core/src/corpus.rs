//! In-memory data model for half-scales, context sentences and scalar
//! implicature items.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::backend::CharSpan;
use crate::error::CorpusError;

/// Placeholder token marking the adjective slot of a context sentence.
pub const PLACEHOLDER: &str = "{ADJ}";

/// Number of context sentences each half-scale carries.
pub const CONTEXTS_PER_SCALE: usize = 10;

/// A scalar adjective: lowercase letters and hyphens, no whitespace.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "String", into = "String")
)]
pub struct Adjective(String);

impl Adjective {
    pub fn new(surface: &str) -> Result<Self, CorpusError> {
        let valid = !surface.is_empty()
            && !surface.starts_with('-')
            && !surface.ends_with('-')
            && surface
                .chars()
                .all(|c| c == '-' || (c.is_alphabetic() && !c.is_uppercase()));
        if valid {
            Ok(Self(surface.to_string()))
        } else {
            Err(CorpusError::InvalidAdjective(surface.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Adjective {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Adjective::new(&value)
    }
}

impl From<Adjective> for String {
    fn from(value: Adjective) -> Self {
        value.0
    }
}

impl fmt::Display for Adjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Gold relation between two adjectives listed in scale order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Relation {
    /// The first adjective is weaker than the second (`<`).
    #[cfg_attr(feature = "serde", serde(rename = "<"))]
    Weaker,
    /// Equal intensity (`=`).
    #[cfg_attr(feature = "serde", serde(rename = "="))]
    Equal,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Weaker => "<",
            Relation::Equal => "=",
        })
    }
}

/// One unordered adjective pair of a half-scale, listed weaker first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalePair {
    pub first: Adjective,
    pub second: Adjective,
    pub relation: Relation,
}

/// One polarity side of an adjective scale, as tie-groups ordered weakest
/// first.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HalfScale {
    scale_id: String,
    groups: Vec<Vec<Adjective>>,
}

impl HalfScale {
    pub fn new(scale_id: &str, groups: Vec<Vec<Adjective>>) -> Result<Self, CorpusError> {
        if scale_id.trim().is_empty() {
            return Err(CorpusError::EmptyScaleId);
        }
        if groups.iter().any(Vec::is_empty) {
            return Err(CorpusError::EmptyGroup(scale_id.to_string()));
        }
        let mut seen = BTreeSet::new();
        for adjective in groups.iter().flatten() {
            if !seen.insert(adjective) {
                return Err(CorpusError::DuplicateAdjective {
                    scale_id: scale_id.to_string(),
                    adjective: adjective.to_string(),
                });
            }
        }
        if seen.len() < 2 {
            return Err(CorpusError::TooFewAdjectives(scale_id.to_string()));
        }
        Ok(Self {
            scale_id: scale_id.to_string(),
            groups,
        })
    }

    /// Convenience constructor from string groups, mainly for fixtures.
    pub fn from_words(scale_id: &str, groups: &[&[&str]]) -> Result<Self, CorpusError> {
        let groups = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|w| Adjective::new(w))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(scale_id, groups)
    }

    pub fn id(&self) -> &str {
        &self.scale_id
    }

    pub fn groups(&self) -> &[Vec<Adjective>] {
        &self.groups
    }

    /// All adjectives, weakest group first, listing order within groups.
    pub fn adjectives(&self) -> impl Iterator<Item = &Adjective> + '_ {
        self.groups.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, word: &str) -> bool {
        self.adjectives().any(|a| a.as_str() == word)
    }

    /// Intensity level (group index, 0 = weakest) of an adjective.
    pub fn level_of(&self, adjective: &Adjective) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(adjective))
    }

    /// Canonical mildest adjective: first listed member of the weakest group.
    pub fn mildest(&self) -> &Adjective {
        &self.groups[0][0]
    }

    /// Canonical extreme adjective: first listed member of the strongest group.
    pub fn extreme(&self) -> &Adjective {
        &self.groups[self.groups.len() - 1][0]
    }

    /// True when the adjective belongs to the strongest tie-group.
    pub fn in_strongest_group(&self, adjective: &Adjective) -> bool {
        self.groups[self.groups.len() - 1].contains(adjective)
    }

    /// Whether either extreme group has more than one member, so the canonical
    /// endpoint was picked by listing order.
    pub fn has_tied_endpoint(&self) -> bool {
        self.groups[0].len() > 1 || self.groups[self.groups.len() - 1].len() > 1
    }

    /// All unordered pairs with their gold relation, in scale order.
    pub fn pairs(&self) -> Vec<ScalePair> {
        enumerate_pairs(self)
    }
}

/// Every unordered adjective pair of a half-scale with its gold relation.
/// Pairs inside one tie-group are `=`; the rest are `<` with the weaker
/// adjective first. Yields `n * (n - 1) / 2` pairs.
pub fn enumerate_pairs(scale: &HalfScale) -> Vec<ScalePair> {
    let flat: Vec<(usize, &Adjective)> = scale
        .groups
        .iter()
        .enumerate()
        .flat_map(|(level, g)| g.iter().map(move |a| (level, a)))
        .collect();
    let mut pairs = Vec::with_capacity(flat.len() * flat.len().saturating_sub(1) / 2);
    for (i, &(li, a)) in flat.iter().enumerate() {
        for &(lj, b) in &flat[i + 1..] {
            pairs.push(ScalePair {
                first: a.clone(),
                second: b.clone(),
                relation: if li == lj {
                    Relation::Equal
                } else {
                    Relation::Weaker
                },
            });
        }
    }
    pairs
}

/// Expected counts for a half-scale dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleManifest {
    pub scales: usize,
    pub pairs: usize,
}

/// Expected counts for a scalar implicature dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiManifest {
    pub total: usize,
    pub yes: usize,
    pub no: usize,
}

/// Counts of the published datasets.
pub mod published {
    use super::{ScaleManifest, SiManifest};

    pub const DM: ScaleManifest = ScaleManifest {
        scales: 87,
        pairs: 548,
    };
    pub const CD: ScaleManifest = ScaleManifest {
        scales: 77,
        pairs: 330,
    };
    pub const WK: ScaleManifest = ScaleManifest {
        scales: 21,
        pairs: 61,
    };

    pub const PVT: SiManifest = SiManifest {
        total: 50,
        yes: 13,
        no: 37,
    };
    pub const GZ: SiManifest = SiManifest {
        total: 70,
        yes: 19,
        no: 51,
    };
    pub const RX: SiManifest = SiManifest {
        total: 32,
        yes: 5,
        no: 27,
    };

    pub fn scale_manifest(dataset_id: &str) -> Option<ScaleManifest> {
        match dataset_id {
            "DM" => Some(DM),
            "CD" => Some(CD),
            "WK" => Some(WK),
            _ => None,
        }
    }

    pub fn si_manifest(dataset_id: &str) -> Option<SiManifest> {
        match dataset_id {
            "PVT" => Some(PVT),
            "GZ" => Some(GZ),
            "RX" => Some(RX),
            _ => None,
        }
    }
}

/// A named collection of half-scales.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleDataset {
    dataset_id: String,
    scales: Vec<HalfScale>,
}

impl ScaleDataset {
    pub fn new(dataset_id: &str, scales: Vec<HalfScale>) -> Result<Self, CorpusError> {
        let mut ids = BTreeSet::new();
        for scale in &scales {
            if !ids.insert(scale.id()) {
                return Err(CorpusError::DuplicateScaleId {
                    dataset_id: dataset_id.to_string(),
                    scale_id: scale.id().to_string(),
                });
            }
        }
        Ok(Self {
            dataset_id: dataset_id.to_string(),
            scales,
        })
    }

    pub fn id(&self) -> &str {
        &self.dataset_id
    }

    pub fn scales(&self) -> &[HalfScale] {
        &self.scales
    }

    pub fn scale(&self, scale_id: &str) -> Option<&HalfScale> {
        self.scales.iter().find(|s| s.id() == scale_id)
    }

    /// Number of distinct unordered adjective pairs across all scales.
    pub fn distinct_pair_count(&self) -> usize {
        let mut seen = BTreeSet::new();
        for pair in self.scales.iter().flat_map(enumerate_pairs) {
            let key = if pair.first <= pair.second {
                (pair.first, pair.second)
            } else {
                (pair.second, pair.first)
            };
            seen.insert(key);
        }
        seen.len()
    }

    pub fn total_pairs(&self) -> usize {
        self.scales
            .iter()
            .map(|s| s.len() * (s.len() - 1) / 2)
            .sum()
    }

    pub fn check_manifest(&self, manifest: &ScaleManifest) -> Result<(), CorpusError> {
        let mismatch = |what, expected, found| CorpusError::ManifestMismatch {
            dataset_id: self.dataset_id.clone(),
            what,
            expected,
            found,
        };
        if self.scales.len() != manifest.scales {
            return Err(mismatch("half-scales", manifest.scales, self.scales.len()));
        }
        let pairs = self.distinct_pair_count();
        if pairs != manifest.pairs {
            return Err(mismatch("distinct adjective pairs", manifest.pairs, pairs));
        }
        Ok(())
    }

    /// Every distinct adjective in the dataset.
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.scales
            .iter()
            .flat_map(|s| s.adjectives().map(Adjective::as_str))
            .collect()
    }
}

/// The context sentences shared by all adjectives of one half-scale.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContextSet {
    scale_id: String,
    sentences: Vec<String>,
}

impl ContextSet {
    pub fn new(scale_id: &str, sentences: Vec<String>) -> Result<Self, CorpusError> {
        if sentences.len() != CONTEXTS_PER_SCALE {
            return Err(CorpusError::ContextCount {
                scale_id: scale_id.to_string(),
                expected: CONTEXTS_PER_SCALE,
                found: sentences.len(),
            });
        }
        for sentence in &sentences {
            let found = sentence.matches(PLACEHOLDER).count();
            if found != 1 {
                return Err(CorpusError::PlaceholderCount {
                    scale_id: scale_id.to_string(),
                    found,
                    sentence: sentence.clone(),
                });
            }
        }
        Ok(Self {
            scale_id: scale_id.to_string(),
            sentences,
        })
    }

    pub fn scale_id(&self) -> &str {
        &self.scale_id
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    /// Substitutes `word` into sentence `index`.
    pub fn instantiate(&self, index: usize, word: &str) -> (String, CharSpan) {
        substitute(&self.sentences[index], word)
    }
}

/// Validates context sets against a dataset and indexes them by scale id.
pub fn index_contexts(
    sets: Vec<ContextSet>,
    dataset: &ScaleDataset,
) -> Result<BTreeMap<String, ContextSet>, CorpusError> {
    let mut out = BTreeMap::new();
    for set in sets {
        if dataset.scale(set.scale_id()).is_none() {
            return Err(CorpusError::UnknownScale(set.scale_id.clone()));
        }
        out.insert(set.scale_id.clone(), set);
    }
    Ok(out)
}

fn collapse_spaces(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !last_space {
                out.push(' ');
            }
            last_space = true;
        } else {
            out.push(c);
            last_space = false;
        }
    }
    out
}

/// Replaces the single `{ADJ}` placeholder with `word`, collapsing runs of
/// whitespace to one space and trimming the ends. Returns the text and the
/// character span of the inserted word.
///
/// The caller guarantees exactly one placeholder (see [`ContextSet::new`]).
pub fn substitute(template: &str, word: &str) -> (String, CharSpan) {
    let (before, after) = template.split_once(PLACEHOLDER).unwrap_or((template, ""));
    let before = collapse_spaces(before);
    let before = before.trim_start();
    let after = collapse_spaces(after);
    let after = after.trim_end();
    let start = before.chars().count();
    let end = start + word.chars().count();
    let mut text = String::with_capacity(before.len() + word.len() + after.len());
    text.push_str(before);
    text.push_str(word);
    text.push_str(after);
    (text, CharSpan::new(start, end))
}

/// Surprisal features attached to an implicature item.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurprisalFeatures {
    pub string_surprisal: f64,
    pub concept_surprisal: f64,
}

/// One scalar implicature trial.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiItem {
    pub item_id: String,
    pub utterance: String,
    pub question_predicate: String,
    pub weak_adj: Adjective,
    pub strong_adj: Adjective,
    pub proportion_yes: f64,
    pub gold_label: bool,
    pub features: Option<SurprisalFeatures>,
}

/// Threshold at which a human yes-proportion becomes a `yes` gold label.
pub const GOLD_THRESHOLD: f64 = 0.5;

/// Gold label from the human yes-proportion; at least half means yes.
pub fn gold_label(proportion_yes: f64) -> bool {
    proportion_yes >= GOLD_THRESHOLD
}

/// Raw fields of an implicature item before validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiItemFields<'a> {
    pub item_id: &'a str,
    pub utterance: &'a str,
    pub question_predicate: &'a str,
    pub weak_adj: &'a str,
    pub strong_adj: &'a str,
    pub proportion_yes: f64,
    pub string_surprisal: Option<f64>,
    pub concept_surprisal: Option<f64>,
}

impl SiItem {
    pub fn new(fields: SiItemFields<'_>) -> Result<Self, CorpusError> {
        let item_id = fields.item_id.trim();
        let missing = |field| CorpusError::MissingField {
            item_id: item_id.to_string(),
            field,
        };
        if item_id.is_empty() {
            return Err(missing("item_id"));
        }
        if fields.utterance.trim().is_empty() {
            return Err(missing("utterance"));
        }
        if fields.question_predicate.trim().is_empty() {
            return Err(missing("question_predicate"));
        }
        if fields.weak_adj.trim().is_empty() {
            return Err(missing("weak_adj"));
        }
        if fields.strong_adj.trim().is_empty() {
            return Err(missing("strong_adj"));
        }
        let p = fields.proportion_yes;
        if !(0.0..=1.0).contains(&p) {
            return Err(CorpusError::ProportionRange {
                item_id: item_id.to_string(),
                value: p,
            });
        }
        let features = match (fields.string_surprisal, fields.concept_surprisal) {
            (Some(s), Some(c)) => Some(SurprisalFeatures {
                string_surprisal: s,
                concept_surprisal: c,
            }),
            (None, None) => None,
            _ => {
                return Err(CorpusError::PartialFeatures {
                    item_id: item_id.to_string(),
                })
            }
        };
        Ok(Self {
            item_id: item_id.to_string(),
            utterance: fields.utterance.trim().to_string(),
            question_predicate: fields.question_predicate.trim().to_string(),
            weak_adj: Adjective::new(fields.weak_adj.trim())?,
            strong_adj: Adjective::new(fields.strong_adj.trim())?,
            proportion_yes: p,
            gold_label: gold_label(p),
            features,
        })
    }
}

/// A named collection of implicature items.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiDataset {
    dataset_id: String,
    items: Vec<SiItem>,
}

impl SiDataset {
    pub fn new(dataset_id: &str, items: Vec<SiItem>) -> Result<Self, CorpusError> {
        let mut ids = BTreeSet::new();
        for item in &items {
            if !ids.insert(item.item_id.as_str()) {
                return Err(CorpusError::DuplicateItemId {
                    dataset_id: dataset_id.to_string(),
                    item_id: item.item_id.clone(),
                });
            }
        }
        Ok(Self {
            dataset_id: dataset_id.to_string(),
            items,
        })
    }

    pub fn id(&self) -> &str {
        &self.dataset_id
    }

    pub fn items(&self) -> &[SiItem] {
        &self.items
    }

    /// `(total, yes, no)` gold-label counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        let yes = self.items.iter().filter(|i| i.gold_label).count();
        (self.items.len(), yes, self.items.len() - yes)
    }

    pub fn check_manifest(&self, manifest: &SiManifest) -> Result<(), CorpusError> {
        let (total, yes, no) = self.counts();
        for (what, expected, found) in [
            ("items", manifest.total, total),
            ("yes items", manifest.yes, yes),
            ("no items", manifest.no, no),
        ] {
            if expected != found {
                return Err(CorpusError::ManifestMismatch {
                    dataset_id: self.dataset_id.clone(),
                    what,
                    expected,
                    found,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quality() -> HalfScale {
        HalfScale::from_words(
            "quality",
            &[&["good"], &["great", "wonderful"], &["awesome"]],
        )
        .unwrap()
    }

    #[test]
    fn adjective_validation() {
        assert!(Adjective::new("well-off").is_ok());
        assert!(Adjective::new("naïve").is_ok());
        assert!(Adjective::new("Good").is_err());
        assert!(Adjective::new("very good").is_err());
        assert!(Adjective::new("").is_err());
        assert!(Adjective::new("-x").is_err());
    }

    #[test]
    fn tied_scale_pairs() {
        let s = quality();
        assert_eq!(s.len(), 4);
        assert_eq!(s.groups().len(), 3);
        let pairs = enumerate_pairs(&s);
        assert_eq!(pairs.len(), 6);
        let ties: Vec<_> = pairs
            .iter()
            .filter(|p| p.relation == Relation::Equal)
            .collect();
        assert_eq!(ties.len(), 1);
        assert_eq!(ties[0].first.as_str(), "great");
        assert_eq!(ties[0].second.as_str(), "wonderful");
    }

    #[test]
    fn two_adjective_scale_has_one_strict_pair() {
        let s = HalfScale::from_words("t", &[&["warm"], &["hot"]]).unwrap();
        let pairs = enumerate_pairs(&s);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].relation, Relation::Weaker);
    }

    #[test]
    fn duplicate_adjective_rejected() {
        let err = HalfScale::from_words("x", &[&["good"], &["good"]]).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateAdjective { .. }));
    }

    #[test]
    fn single_adjective_rejected() {
        assert!(matches!(
            HalfScale::from_words("x", &[&["good"]]),
            Err(CorpusError::TooFewAdjectives(_))
        ));
    }

    #[test]
    fn endpoints_use_first_listed_member() {
        let s = HalfScale::from_words("x", &[&["a", "b"], &["c"], &["d", "e"]]).unwrap();
        assert_eq!(s.mildest().as_str(), "a");
        assert_eq!(s.extreme().as_str(), "d");
        assert!(s.has_tied_endpoint());
        assert!(s.in_strongest_group(&Adjective::new("e").unwrap()));
        assert_eq!(s.level_of(&Adjective::new("c").unwrap()), Some(1));
    }

    #[test]
    fn distinct_pairs_dedup_across_scales() {
        let a = HalfScale::from_words("a", &[&["warm"], &["hot"]]).unwrap();
        let b = HalfScale::from_words("b", &[&["warm"], &["hot"], &["scalding"]]).unwrap();
        let d = ScaleDataset::new("T", vec![a, b]).unwrap();
        assert_eq!(d.total_pairs(), 4);
        assert_eq!(d.distinct_pair_count(), 3);
        assert!(d
            .check_manifest(&ScaleManifest {
                scales: 2,
                pairs: 3
            })
            .is_ok());
        assert!(matches!(
            d.check_manifest(&ScaleManifest {
                scales: 2,
                pairs: 4
            }),
            Err(CorpusError::ManifestMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_scale_id_rejected() {
        let a = HalfScale::from_words("a", &[&["warm"], &["hot"]]).unwrap();
        assert!(ScaleDataset::new("T", vec![a.clone(), a]).is_err());
    }

    #[test]
    fn substitution_collapses_spaces() {
        let (text, span) = substitute("They are  {ADJ}  to sing.", "thrilling");
        assert_eq!(text, "They are thrilling to sing.");
        assert_eq!(span, CharSpan::new(9, 18));
        let (text, span) = substitute("{ADJ} day", "nice");
        assert_eq!(text, "nice day");
        assert_eq!(span, CharSpan::new(0, 4));
        let (text, span) = substitute("très {ADJ}!", "bon");
        assert_eq!(text, "très bon!");
        assert_eq!(span, CharSpan::new(5, 8));
    }

    fn ten(sentence: &str) -> Vec<String> {
        (0..10).map(|_| sentence.to_string()).collect()
    }

    #[test]
    fn context_set_validation() {
        assert!(ContextSet::new("taste", ten("They are also {ADJ} to sing.")).is_ok());
        let err = ContextSet::new("taste", ten("no slot here")).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::PlaceholderCount { found: 0, .. }
        ));
        let err = ContextSet::new("taste", ten("{ADJ} and {ADJ}")).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::PlaceholderCount { found: 2, .. }
        ));
        let mut nine = ten("a {ADJ}");
        nine.pop();
        assert!(matches!(
            ContextSet::new("taste", nine),
            Err(CorpusError::ContextCount { found: 9, .. })
        ));
    }

    #[test]
    fn unknown_context_scale_rejected() {
        let d = ScaleDataset::new("T", vec![quality()]).unwrap();
        let set = ContextSet::new("other", ten("a {ADJ} b")).unwrap();
        assert!(matches!(
            index_contexts(vec![set], &d),
            Err(CorpusError::UnknownScale(_))
        ));
    }

    fn item(p: f64) -> Result<SiItem, CorpusError> {
        SiItem::new(SiItemFields {
            item_id: "1",
            utterance: "The problem is hard.",
            question_predicate: "the problem is not unsolvable",
            weak_adj: "hard",
            strong_adj: "unsolvable",
            proportion_yes: p,
            ..Default::default()
        })
    }

    #[test]
    fn gold_label_boundary_is_inclusive() {
        assert!(item(0.5).unwrap().gold_label);
        assert!(!item(0.4999).unwrap().gold_label);
        assert!(matches!(
            item(1.2),
            Err(CorpusError::ProportionRange { .. })
        ));
        assert!(matches!(
            item(-0.1),
            Err(CorpusError::ProportionRange { .. })
        ));
    }

    #[test]
    fn partial_features_rejected() {
        let err = SiItem::new(SiItemFields {
            item_id: "1",
            utterance: "u",
            question_predicate: "q",
            weak_adj: "hard",
            strong_adj: "unsolvable",
            proportion_yes: 0.2,
            string_surprisal: Some(1.0),
            concept_surprisal: None,
        })
        .unwrap_err();
        assert!(matches!(err, CorpusError::PartialFeatures { .. }));
    }

    #[test]
    fn empty_predicate_rejected() {
        let err = SiItem::new(SiItemFields {
            item_id: "1",
            utterance: "u",
            question_predicate: " ",
            weak_adj: "hard",
            strong_adj: "unsolvable",
            proportion_yes: 0.2,
            ..Default::default()
        })
        .unwrap_err();
        assert!(matches!(
            err,
            CorpusError::MissingField {
                field: "question_predicate",
                ..
            }
        ));
    }

    #[test]
    fn si_counts_and_manifest() {
        let items = (0..4)
            .map(|i| {
                let id = alloc::format!("{i}");
                SiItem::new(SiItemFields {
                    item_id: &id,
                    utterance: "u",
                    question_predicate: "q",
                    weak_adj: "good",
                    strong_adj: "excellent",
                    proportion_yes: if i == 0 { 0.9 } else { 0.1 },
                    ..Default::default()
                })
                .unwrap()
            })
            .collect();
        let d = SiDataset::new("S", items).unwrap();
        assert_eq!(d.counts(), (4, 1, 3));
        assert!(d
            .check_manifest(&SiManifest {
                total: 4,
                yes: 1,
                no: 3
            })
            .is_ok());
        assert!(d
            .check_manifest(&SiManifest {
                total: 4,
                yes: 2,
                no: 2
            })
            .is_err());
    }
}
