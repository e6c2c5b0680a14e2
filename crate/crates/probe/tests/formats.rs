use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use proptest::prelude::*;

use scalar_probe::core::corpus::{ScaleManifest, SiItemFields};
use scalar_probe::core::indirect::{Direction, TemplateCategory};
use scalar_probe::core::{
    Adjective, Backend, ContextSet, HalfScale, ScaleDataset, SiDataset, SiItem,
};
use scalar_probe::formats::{self, ManifestCheck};
use scalar_probe::Error;

fn p() -> &'static Path {
    Path::new("test.tsv")
}

fn parse_line(err: Error) -> usize {
    match err {
        Error::Parse { line, .. } => line,
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn scale_file_with_ties_and_comments() {
    let text = "# header\n\ntemperature\twarm < hot = scalding < boiling\nsize\tbig<huge\n";
    let d = formats::parse_scale_dataset(text, "T", p()).unwrap();
    assert_eq!(d.scales().len(), 2);
    let t = d.scale("temperature").unwrap();
    assert_eq!(t.groups().len(), 3);
    assert_eq!(t.groups()[1].len(), 2);
    assert_eq!(t.mildest().as_str(), "warm");
    assert_eq!(t.extreme().as_str(), "boiling");
    // 6 pairs in the first scale, 1 in the second.
    assert_eq!(d.distinct_pair_count(), 7);
}

#[test]
fn scale_errors_carry_line_numbers() {
    let missing_tab = "# c\ntemperature warm < hot\n";
    assert_eq!(
        parse_line(formats::parse_scale_dataset(missing_tab, "T", p()).unwrap_err()),
        2
    );
    let bad_word = "a\twarm < hot\n\nb\tbig < Huge\n";
    assert_eq!(
        parse_line(formats::parse_scale_dataset(bad_word, "T", p()).unwrap_err()),
        3
    );
    let single = "a\twarm\n";
    assert_eq!(
        parse_line(formats::parse_scale_dataset(single, "T", p()).unwrap_err()),
        1
    );
    let repeated = "a\twarm < hot\na\tbig < huge\n";
    assert!(matches!(
        formats::parse_scale_dataset(repeated, "T", p()).unwrap_err(),
        Error::Corpus { .. }
    ));
}

#[test]
fn manifest_mismatch_names_the_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    std::fs::write(&path, "a\twarm < hot < scalding\n").unwrap();
    let err = formats::load_scale_dataset(
        &path,
        "X",
        ManifestCheck::Expect(ScaleManifest {
            scales: 1,
            pairs: 2,
        }),
    )
    .unwrap_err()
    .to_string();
    assert!(
        err.contains("expected 2") && err.contains("found 3"),
        "{err}"
    );
    assert!(formats::load_scale_dataset(&path, "X", ManifestCheck::Auto).is_ok());
    assert!(formats::load_scale_dataset(&path, "DM", ManifestCheck::Skip).is_ok());
    assert!(formats::load_scale_dataset(&path, "DM", ManifestCheck::Auto).is_err());
}

fn ten_contexts(id: &str) -> String {
    (0..10)
        .map(|i| format!("{id}\tSentence {i} is {{ADJ}} here.\n"))
        .collect()
}

#[test]
fn contexts_grouped_and_checked() {
    let text = format!("# c\n{}{}", ten_contexts("a"), ten_contexts("b"));
    let sets = formats::parse_context_sets(&text, p()).unwrap();
    assert_eq!(sets.len(), 2);
    assert_eq!(sets[0].scale_id(), "a");
    assert_eq!(sets[1].sentences()[3], "Sentence 3 is {ADJ} here.");

    let nine: String = ten_contexts("a")
        .lines()
        .skip(1)
        .map(|l| format!("{l}\n"))
        .collect();
    assert!(formats::parse_context_sets(&nine, p()).is_err());

    let no_slot = ten_contexts("a").replacen("{ADJ}", "x", 1);
    assert!(formats::parse_context_sets(&no_slot, p()).is_err());
}

#[test]
fn contexts_for_unknown_scale_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tsv");
    std::fs::write(&path, ten_contexts("nope")).unwrap();
    let scales = ScaleDataset::new(
        "T",
        vec![HalfScale::from_words("a", &[&["warm"], &["hot"]]).unwrap()],
    )
    .unwrap();
    let err = formats::load_context_sets(&path, &scales)
        .unwrap_err()
        .to_string();
    assert!(err.contains("nope"), "{err}");
}

const SI_HEADER: &str = "item_id,utterance,question_predicate,weak_adj,strong_adj,proportion_yes,gold_label,string_surprisal,concept_surprisal\n";

#[test]
fn si_csv_labels_and_features() {
    let text = format!(
        "# c\n{SI_HEADER}a,It is warm.,it is not hot,warm,hot,0.5,yes,1.5,2\nb,It is big.,it is not huge,big,huge,0.49,0,,\n"
    );
    let d = formats::parse_si_csv(&text, "X", p()).unwrap();
    assert_eq!(d.counts(), (2, 1, 1));
    assert!(d.items()[0].gold_label);
    assert_eq!(d.items()[0].features.unwrap().concept_surprisal, 2.0);
    assert!(d.items()[1].features.is_none());
}

#[test]
fn si_csv_errors_carry_line_numbers() {
    let mismatch = format!(
        "# c\n{SI_HEADER}a,It is warm.,it is not hot,warm,hot,0.5,yes,,\nb,It is big.,it is not huge,big,huge,0.7,no,,\n"
    );
    assert_eq!(
        parse_line(formats::parse_si_csv(&mismatch, "X", p()).unwrap_err()),
        4
    );
    let range = format!("{SI_HEADER}a,It is warm.,it is not hot,warm,hot,1.5,,,\n");
    assert_eq!(
        parse_line(formats::parse_si_csv(&range, "X", p()).unwrap_err()),
        2
    );
    let partial = format!("{SI_HEADER}a,It is warm.,it is not hot,warm,hot,0.2,,1.0,\n");
    assert!(formats::parse_si_csv(&partial, "X", p())
        .unwrap_err()
        .to_string()
        .contains("both present"));
    let dup = format!(
        "{SI_HEADER}a,It is warm.,it is not hot,warm,hot,0.2,,,\na,It is big.,it is not huge,big,huge,0.7,,,\n"
    );
    assert!(matches!(
        formats::parse_si_csv(&dup, "X", p()).unwrap_err(),
        Error::Corpus { .. }
    ));
}

#[test]
fn si_json_matches_csv() {
    let json = r#"[
        {"item_id": "a", "utterance": "It is warm.", "question_predicate": "it is not hot",
         "weak_adj": "warm", "strong_adj": "hot", "proportion_yes": 0.8, "gold_label": true,
         "string_surprisal": 1.5, "concept_surprisal": 2.0}
    ]"#;
    let from_json = formats::parse_si_json(json, "X", p()).unwrap();
    let csv = format!("{SI_HEADER}a,It is warm.,it is not hot,warm,hot,0.8,yes,1.5,2.0\n");
    let from_csv = formats::parse_si_csv(&csv, "X", p()).unwrap();
    assert_eq!(from_json, from_csv);
}

#[test]
fn shipped_templates() {
    let t = formats::builtin_templates();
    let count = |c| t.iter().filter(|x| x.category == c).count();
    assert_eq!(count(TemplateCategory::Membership), 4);
    assert_eq!(count(TemplateCategory::Intensity), 34);
    let intensity: BTreeMap<u32, &str> = t
        .iter()
        .filter(|x| x.category == TemplateCategory::Intensity)
        .map(|x| (x.id, x.pattern.as_str()))
        .collect();
    assert_eq!(
        intensity.keys().copied().collect::<Vec<_>>(),
        (0..34).collect::<Vec<_>>()
    );
    // Only the two known duplicate patterns repeat.
    let mut seen: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for (id, pat) in &intensity {
        seen.entry(pat).or_default().push(*id);
    }
    let repeats: BTreeSet<Vec<u32>> = seen.into_values().filter(|v| v.len() > 1).collect();
    assert_eq!(repeats, BTreeSet::from([vec![6, 12], vec![25, 27]]));
    for x in &t {
        let filled = x.instantiate("warm", "hot");
        assert!(!filled.contains('{'), "{filled}");
        let (w, s) = (filled.find("warm").unwrap(), filled.find("hot").unwrap());
        assert_eq!(w < s, x.direction == Direction::WeakStrong, "{}", x.pattern);
    }
}

#[test]
fn template_file_errors() {
    let dup = "0\tintensity\tweak-strong\t{WEAK} but not {STRONG}\n0\tintensity\tweak-strong\t{WEAK} and {STRONG}\n";
    assert_eq!(
        parse_line(formats::parse_templates(dup, p()).unwrap_err()),
        2
    );
    let wrong_dir = "0\tintensity\tstrong-weak\t{WEAK} but not {STRONG}\n";
    assert_eq!(
        parse_line(formats::parse_templates(wrong_dir, p()).unwrap_err()),
        1
    );
    let cols = "0\tintensity\t{WEAK} but not {STRONG}\n";
    assert_eq!(
        parse_line(formats::parse_templates(cols, p()).unwrap_err()),
        1
    );
    // The same id may be used once per category.
    let ok = "1\tmembership\tweak-strong\t{WEAK} or even {STRONG}\n1\tintensity\tweak-strong\t{WEAK} and almost {STRONG}\n";
    assert_eq!(formats::parse_templates(ok, p()).unwrap().len(), 2);
}

#[test]
fn vectors_header_vocabulary_and_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.vec");
    std::fs::write(&path, "3 2\nwarm 1 0\nhot 0 1\ncold 0.5 0.5\nwarm 2 0\n").unwrap();
    let all = formats::load_static_vectors(&path, "ft", None).unwrap();
    assert_eq!(all.len(), 3);
    // The duplicate keeps its last vector.
    assert_eq!(all.get("warm").unwrap(), &[2.0, 0.0]);
    let vocab = BTreeSet::from(["hot".to_string()]);
    let some = formats::load_static_vectors(&path, "ft", Some(&vocab)).unwrap();
    assert_eq!(some.len(), 1);
    assert_eq!(some.descriptor().hidden_size, 2);

    std::fs::write(&path, "warm 1 0\nhot 0 1 2\n").unwrap();
    assert_eq!(
        parse_line(formats::load_static_vectors(&path, "ft", None).unwrap_err()),
        2
    );
}

#[test]
fn ngram_table_sums_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.tsv");
    std::fs::write(&path, "# c\nwarm but not hot\t3\nwarm  but not hot\t2\n").unwrap();
    let t = formats::load_ngram_table(&path, "ng").unwrap();
    assert_eq!(t.count("warm but not hot"), 5.0);
    std::fs::write(&path, "warm but not hot\t-1\n").unwrap();
    assert_eq!(
        parse_line(formats::load_ngram_table(&path, "ng").unwrap_err()),
        1
    );
}

#[test]
fn missing_file_is_an_io_error() {
    let err = formats::load_templates(Path::new("/nonexistent/t.tsv")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().starts_with("/nonexistent/t.tsv"));
}

// Round trips.

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}(-[a-z]{1,4})?"
}

fn scale() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::btree_set(word(), 2..7).prop_flat_map(|words| {
        let words: Vec<String> = words.into_iter().collect();
        let n = words.len();
        (Just(words), prop::collection::vec(any::<bool>(), n - 1)).prop_map(|(words, cuts)| {
            let mut groups = vec![vec![words[0].clone()]];
            for (w, cut) in words[1..].iter().zip(cuts) {
                if cut {
                    groups.push(vec![w.clone()]);
                } else {
                    groups.last_mut().unwrap().push(w.clone());
                }
            }
            groups
        })
    })
}

fn dataset() -> impl Strategy<Value = ScaleDataset> {
    prop::collection::vec(scale(), 1..6).prop_filter_map("needs two groups", |scales| {
        let halves: Option<Vec<HalfScale>> = scales
            .iter()
            .enumerate()
            .map(|(i, groups)| {
                let groups: Vec<Vec<Adjective>> = groups
                    .iter()
                    .map(|g| g.iter().map(|w| Adjective::new(w).unwrap()).collect())
                    .collect();
                HalfScale::new(&format!("s{i}"), groups).ok()
            })
            .collect();
        ScaleDataset::new("R", halves?).ok()
    })
}

fn item(i: usize) -> impl Strategy<Value = SiItem> {
    (
        "[A-Z][a-z]{0,6}( [a-z,\"]{1,6}){0,4}\\.",
        word(),
        word(),
        0u32..=20,
        prop::option::of((-5.0f64..30.0, -5.0f64..30.0)),
    )
        .prop_map(move |(utterance, weak, strong, yes, feats)| {
            let predicate = format!("it is not {strong}");
            SiItem::new(SiItemFields {
                item_id: &format!("i{i}"),
                utterance: &utterance,
                question_predicate: &predicate,
                weak_adj: &weak,
                strong_adj: &strong,
                proportion_yes: f64::from(yes) / 20.0,
                string_surprisal: feats.map(|f| f.0),
                concept_surprisal: feats.map(|f| f.1),
            })
            .unwrap()
        })
}

fn si_dataset() -> impl Strategy<Value = SiDataset> {
    (1usize..8)
        .prop_flat_map(|n| (0..n).map(item).collect::<Vec<_>>())
        .prop_map(|items| SiDataset::new("R", items).unwrap())
}

proptest! {
    #[test]
    fn scales_round_trip(d in dataset()) {
        let text = formats::write_scale_dataset(&d);
        let back = formats::parse_scale_dataset(&text, "R", p()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn contexts_round_trip(
        sentences in prop::collection::vec(
            prop::collection::vec("[A-Za-z ,']{0,12}", 10).prop_map(|parts| {
                parts.into_iter().map(|s| format!("X{s} {{ADJ}} end.")).collect::<Vec<_>>()
            }),
            1..4,
        )
    ) {
        let sets: Vec<ContextSet> = sentences
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let trimmed = s.into_iter().map(|x| x.trim().to_string()).collect();
                ContextSet::new(&format!("s{i}"), trimmed).unwrap()
            })
            .collect();
        let text = formats::write_context_sets(&sets);
        let back = formats::parse_context_sets(&text, p()).unwrap();
        prop_assert_eq!(back, sets);
    }

    #[test]
    fn si_csv_round_trip(d in si_dataset()) {
        let text = formats::write_si_csv(&d);
        let back = formats::parse_si_csv(&text, "R", p()).unwrap();
        prop_assert_eq!(back, d);
    }
}
