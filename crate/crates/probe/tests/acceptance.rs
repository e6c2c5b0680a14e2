//! Acceptance criteria, one PASS/FAIL/BLOCKED line each.
//!
//! Criteria that need published datasets or pretrained models run only when
//! their inputs are present:
//!
//! * `PROBE_DATA_DIR`: directory holding `DM.tsv`, `CD.tsv`, `WK.tsv`, the
//!   matching `<ID>_contexts.tsv` files and `PVT.csv`, `GZ.csv`, `RX.csv`;
//! * `PROBE_HF_MODELS=1`: `scripts/hf_backend.py` can load `bert-base-uncased`
//!   and `roberta-base`;
//! * `PROBE_FASTTEXT`: path of the fastText `.vec` file.
//!
//! `acceptance_report` runs every criterion whose inputs are available and
//! prints a line per criterion. The `#[ignore]`d tests run one published
//! criterion and fail if its inputs are missing.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use scalar_probe::config::ExperimentConfig;
use scalar_probe::core::corpus::{ScaleManifest, SiManifest};
use scalar_probe::core::direct::{rank_intensity, score_ranking, worst_rank};
use scalar_probe::core::metrics;
use scalar_probe::core::mock::UniformMaskedLm;
use scalar_probe::core::pragmatics::{compute_cy, compute_wy, CalibrationState};
use scalar_probe::core::representations::{RepresentationMode, ScaleReps};
use scalar_probe::core::{Adjective, Backend, HalfScale};
use scalar_probe::formats::{self, ManifestCheck};
use scalar_probe::record::{ProbeResult, RunRecord};
use scalar_probe::runner;

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn synthetic(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/synthetic")
        .join(name)
}

fn runner_for(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn data_dir() -> Result<PathBuf, String> {
    let dir = std::env::var_os("PROBE_DATA_DIR")
        .map(PathBuf::from)
        .ok_or("PROBE_DATA_DIR is not set (published datasets unavailable)")?;
    if !dir.is_dir() {
        return Err(format!(
            "PROBE_DATA_DIR {} is not a directory",
            dir.display()
        ));
    }
    Ok(dir)
}

fn hf_models() -> Result<(), String> {
    match std::env::var("PROBE_HF_MODELS").as_deref() {
        Ok("1") => Ok(()),
        _ => Err("PROBE_HF_MODELS is not 1 (pretrained model weights unavailable)".into()),
    }
}

fn cell(record: &RunRecord, key: &str) -> Result<f64, String> {
    record
        .summary
        .cells
        .get(key)
        .map(|c| c.mean)
        .ok_or_else(|| format!("record has no {key:?} cell"))
}

fn run_config(file: &str, overrides: &[String]) -> Result<RunRecord, String> {
    let path = workspace().join("configs").join(file);
    let config = ExperimentConfig::load(&path, overrides).map_err(|e| e.to_string())?;
    runner::run(&config).map_err(|e| e.to_string())
}

fn hf_command(model: &str) -> String {
    let script = workspace().join("scripts/hf_backend.py");
    format!(
        "backend.command=[\"python3\", {:?}, \"--model\", {model:?}]",
        script.display().to_string()
    )
}

fn scale_source(key: &str, dir: &Path, id: &str, contexts: bool) -> Vec<String> {
    let mut out = vec![
        format!("data.{key}.id={id:?}"),
        format!(
            "data.{key}.scales={:?}",
            dir.join(format!("{id}.tsv")).display().to_string()
        ),
    ];
    if contexts {
        out.push(format!(
            "data.{key}.contexts={:?}",
            dir.join(format!("{id}_contexts.tsv")).display().to_string()
        ));
    }
    out
}

// 1. Direct membership with BERT-base and fastText.

fn criterion_1() -> Outcome {
    let (dir, fasttext) = match (data_dir(), hf_models(), std::env::var_os("PROBE_FASTTEXT")) {
        (Ok(d), Ok(()), Some(f)) => (d, PathBuf::from(f)),
        (Err(e), _, _) | (_, Err(e), _) => return Outcome::Blocked(e),
        (_, _, None) => {
            return Outcome::Blocked(
                "PROBE_FASTTEXT is not set (fastText vectors unavailable)".into(),
            )
        }
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for (id, want, tol) in [
        ("WK", 0.997, 0.015),
        ("DM", 0.829, 0.04),
        ("CD", 0.797, 0.04),
    ] {
        let mut o = scale_source("eval", &dir, id, true);
        o.push(hf_command("bert-base-uncased"));
        match run_config("bert-membership-wk.toml", &o).and_then(|r| cell(&r, "mrr")) {
            Ok(v) => {
                ok &= close(v, want, tol);
                lines.push(format!("bert {id} {v:.3} (want {want} ± {tol})"));
            }
            Err(e) => return Outcome::Fail(format!("bert {id}: {e}")),
        }
    }
    let mut o = scale_source("eval", &dir, "WK", false);
    o.push(format!("backend.path={:?}", fasttext.display().to_string()));
    match run_config("fasttext-membership-wk.toml", &o).and_then(|r| cell(&r, "mrr")) {
        Ok(v) => {
            ok &= close(v, 0.983, 0.01);
            lines.push(format!("fasttext WK {v:.3} (want 0.983 ± 0.01)"));
        }
        Err(e) => return Outcome::Fail(format!("fasttext WK: {e}")),
    }
    check(ok, lines.join("; "))
}

// 2. Direct intensity ranking, shuffle-bind against shared contexts.

fn intensity_run(
    dir: &Path,
    model: &str,
    eval: &str,
    source: &str,
    mode: &str,
) -> Result<RunRecord, String> {
    let mut o = scale_source("eval", dir, eval, true);
    o.extend(scale_source("dvec_source", dir, source, true));
    o.push(hf_command(model));
    o.push(format!("backend.id={model:?}"));
    o.push(format!("direct.mode={mode:?}"));
    run_config("bert-intensity-wk.toml", &o)
}

fn criterion_2() -> Outcome {
    let dir = match data_dir().and_then(|d| hf_models().map(|()| d)) {
        Ok(d) => d,
        Err(e) => return Outcome::Blocked(e),
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for (model, eval, want) in [
        ("bert-base-uncased", "WK", 0.967),
        ("roberta-base", "CD", 0.748),
    ] {
        match intensity_run(&dir, model, eval, "DM", "ours").and_then(|r| cell(&r, "pacc")) {
            Ok(v) => {
                ok &= close(v, want, 0.03);
                lines.push(format!("{model} {eval}/DM {v:.3} (want {want} ± 0.03)"));
            }
            Err(e) => return Outcome::Fail(format!("{model} {eval}: {e}")),
        }
    }
    let ids = ["DM", "CD", "WK"];
    for eval in ids {
        for source in ids.iter().filter(|s| **s != eval) {
            let pacc = |mode| {
                intensity_run(&dir, "roberta-base", eval, source, mode)
                    .and_then(|r| cell(&r, "pacc"))
            };
            match (pacc("ours"), pacc("g-and-a")) {
                (Ok(ours), Ok(ga)) => {
                    ok &= ours >= ga;
                    lines.push(format!(
                        "roberta {eval}/{source} ours {ours:.3} vs g&a {ga:.3}"
                    ));
                }
                (Err(e), _) | (_, Err(e)) => {
                    return Outcome::Fail(format!("roberta {eval}/{source}: {e}"))
                }
            }
        }
    }
    check(ok, lines.join("; "))
}

// 3. Minimal-pair intensity, best in-dataset template.

fn criterion_3() -> Outcome {
    let dir = match data_dir().and_then(|d| hf_models().map(|()| d)) {
        Ok(d) => d,
        Err(e) => return Outcome::Blocked(e),
    };
    let mut o = scale_source("eval", &dir, "WK", false);
    o.push(format!(
        "data.extra=[{{ id = \"DM\", scales = {:?} }}, {{ id = \"CD\", scales = {:?} }}]",
        dir.join("DM.tsv").display().to_string(),
        dir.join("CD.tsv").display().to_string()
    ));
    o.push(hf_command("bert-base-uncased"));
    match run_config("bert-indirect-wk.toml", &o).and_then(|r| cell(&r, "accuracy.in-dataset")) {
        Ok(v) => check(
            close(v, 0.770, 0.03),
            format!("bert WK {v:.3} (want 0.770 ± 0.03)"),
        ),
        Err(e) => Outcome::Fail(e),
    }
}

// 4. Rank correlations for BERT-base on WK, dVec from DM.

fn criterion_4() -> Outcome {
    let dir = match data_dir().and_then(|d| hf_models().map(|()| d)) {
        Ok(d) => d,
        Err(e) => return Outcome::Blocked(e),
    };
    let record = match intensity_run(&dir, "bert-base-uncased", "WK", "DM", "ours") {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e),
    };
    match (cell(&record, "tau"), cell(&record, "rho")) {
        (Ok(tau), Ok(rho)) => check(
            close(tau, 0.934, 0.04) && close(rho, 0.951, 0.04),
            format!("tau {tau:.3} (want 0.934 ± 0.04), rho {rho:.3} (want 0.951 ± 0.04)"),
        ),
        (Err(e), _) | (_, Err(e)) => Outcome::Fail(e),
    }
}

// 5. Loader counts. The synthetic part always runs; the published part needs
// the data directory.

fn criterion_5_loader() -> Outcome {
    let scales = synthetic("syn_scales.tsv");
    let si = synthetic("si.csv");
    let exact = ManifestCheck::Expect(ScaleManifest {
        scales: 3,
        pairs: 19,
    });
    if let Err(e) = formats::load_scale_dataset(&scales, "SYN", exact) {
        return Outcome::Fail(format!("exact scale manifest rejected: {e}"));
    }
    let off = ManifestCheck::Expect(ScaleManifest {
        scales: 3,
        pairs: 18,
    });
    if formats::load_scale_dataset(&scales, "SYN", off).is_ok() {
        return Outcome::Fail("scale pair count mismatch accepted".into());
    }
    // A file loaded under a published id must have the published counts.
    if formats::load_scale_dataset(&scales, "WK", ManifestCheck::Auto).is_ok() {
        return Outcome::Fail("synthetic file accepted as WK".into());
    }
    let si_exact = ManifestCheck::Expect(SiManifest {
        total: 10,
        yes: 5,
        no: 5,
    });
    if let Err(e) = formats::load_si_dataset(&si, "SYNSI", si_exact) {
        return Outcome::Fail(format!("exact implicature manifest rejected: {e}"));
    }
    let si_off = ManifestCheck::Expect(SiManifest {
        total: 10,
        yes: 6,
        no: 4,
    });
    if formats::load_si_dataset(&si, "SYNSI", si_off).is_ok() {
        return Outcome::Fail("yes/no count mismatch accepted".into());
    }
    if formats::load_si_dataset(&si, "PVT", ManifestCheck::Auto).is_ok() {
        return Outcome::Fail("synthetic file accepted as PVT".into());
    }
    Outcome::Pass("exact counts load, any mismatch fails".into())
}

fn criterion_5_published() -> Outcome {
    let dir = match data_dir() {
        Ok(d) => d,
        Err(e) => return Outcome::Blocked(e),
    };
    let mut lines = Vec::new();
    for id in ["DM", "CD", "WK"] {
        match formats::load_scale_dataset(&dir.join(format!("{id}.tsv")), id, ManifestCheck::Auto) {
            Ok(d) => lines.push(format!(
                "{id} {}/{}",
                d.scales().len(),
                d.distinct_pair_count()
            )),
            Err(e) => return Outcome::Fail(e.to_string()),
        }
    }
    for id in ["PVT", "GZ", "RX"] {
        match formats::load_si_dataset(&dir.join(format!("{id}.csv")), id, ManifestCheck::Auto) {
            Ok(d) => {
                let (total, yes, no) = d.counts();
                lines.push(format!("{id} {total} = {yes}+{no}"));
            }
            Err(e) => return Outcome::Fail(e.to_string()),
        }
    }
    Outcome::Pass(lines.join(", "))
}

// 6. Calibration properties.

fn criterion_6() -> Outcome {
    let mut runner = runner_for(1000);
    let fixed_point = runner.run(&(1e-6f64..1.0 - 1e-6), |m| {
        let state = CalibrationState::from_neutral(vec![m]).unwrap();
        prop_assert!(close(state.calibrate(m), 0.5, 1e-9));
        prop_assert!(close(compute_cy(m, m), 0.5, 1e-9));
        Ok(())
    });
    let identity = runner.run(&(0.0f64..=1.0), |wy| {
        prop_assert!(close(compute_cy(wy, 0.5), wy, 1e-9));
        Ok(())
    });
    let invariance = runner.run(
        &(1e-6f64..1.0, 1e-6f64..1.0, 1e-6f64..1e6),
        |(sy, sn, c)| {
            let a = compute_wy(sy, sn).unwrap();
            let b = compute_wy(c * sy, c * sn).unwrap();
            prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
            Ok(())
        },
    );
    match (fixed_point, identity, invariance) {
        (Ok(()), Ok(()), Ok(())) => Outcome::Pass(
            "cy(mean) = 0.5, cy = wy at mean 0.5, wy scale-invariant (1000 cases each)".into(),
        ),
        (Err(e), _, _) => Outcome::Fail(format!("cy(mean) != 0.5: {e}")),
        (_, Err(e), _) => Outcome::Fail(format!("cy != wy at mean 0.5: {e}")),
        (_, _, Err(e)) => Outcome::Fail(format!("wy not scale-invariant: {e}")),
    }
}

// 7. Metrics against brute-force oracles.

const NAMES: [&str; 5] = ["alpha", "bravo", "charlie", "delta", "echo"];

/// Gold level and predicted integer score per adjective.
fn random_scale() -> impl Strategy<Value = Vec<(usize, i32)>> {
    prop::collection::vec((0usize..5, 0i32..4), 2..=5)
}

fn build_scale(levels: &[(usize, i32)]) -> Option<HalfScale> {
    let mut distinct: Vec<usize> = levels.iter().map(|l| l.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let groups: Vec<Vec<Adjective>> = distinct
        .iter()
        .map(|&lvl| {
            levels
                .iter()
                .enumerate()
                .filter(|(_, l)| l.0 == lvl)
                .map(|(i, _)| Adjective::new(NAMES[i]).unwrap())
                .collect()
        })
        .collect();
    HalfScale::new("s", groups).ok()
}

/// Predicted score `s` becomes the vector (s, 1); its cosine to (1, 0) is
/// increasing in `s`, and equal scores give identical vectors.
fn reps_for(levels: &[(usize, i32)]) -> ScaleReps {
    let layer = levels
        .iter()
        .enumerate()
        .map(|(i, l)| (Adjective::new(NAMES[i]).unwrap(), vec![f64::from(l.1), 1.0]))
        .collect();
    ScaleReps {
        scale_id: "s".into(),
        mode: RepresentationMode::InContext,
        seed: 0,
        layers: vec![layer],
    }
}

fn brute_pacc(levels: &[(usize, i32)]) -> (usize, usize) {
    let mut correct = 0;
    let mut total = 0;
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            let (gi, gj) = (levels[i].0, levels[j].0);
            let (pi, pj) = (levels[i].1, levels[j].1);
            total += 1;
            if gi.cmp(&gj) == pi.cmp(&pj) {
                correct += 1;
            }
        }
    }
    (correct, total)
}

fn brute_tau_b(levels: &[(usize, i32)]) -> Option<f64> {
    let (mut concordant, mut discordant, mut tie_x, mut tie_y, mut n0) =
        (0i64, 0i64, 0i64, 0i64, 0i64);
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            n0 += 1;
            let dx = levels[i].0 as i64 - levels[j].0 as i64;
            let dy = i64::from(levels[i].1 - levels[j].1);
            if dx == 0 {
                tie_x += 1;
            }
            if dy == 0 {
                tie_y += 1;
            }
            match (dx * dy).signum() {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    if tie_x == n0 || tie_y == n0 {
        return None;
    }
    Some((concordant - discordant) as f64 / (((n0 - tie_x) * (n0 - tie_y)) as f64).sqrt())
}

/// Average rank by counting: 1 + #smaller + (#equal - 1) / 2.
fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|a| {
            let less = x.iter().filter(|b| *b < a).count() as f64;
            let equal = x.iter().filter(|b| *b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

fn brute_rho(levels: &[(usize, i32)]) -> Option<f64> {
    let rx = brute_ranks(&levels.iter().map(|l| l.0 as f64).collect::<Vec<_>>());
    let ry = brute_ranks(&levels.iter().map(|l| f64::from(l.1)).collect::<Vec<_>>());
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn same(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b, tol),
        (None, None) => true,
        _ => false,
    }
}

fn criterion_7() -> Outcome {
    let mut runner = runner_for(500);
    let ranking = runner.run(&random_scale(), |levels| {
        let Some(scale) = build_scale(&levels) else {
            return Ok(());
        };
        let reps = reps_for(&levels);
        let ranked = rank_intensity(&scale, &reps, 1, &[1.0, 0.0], 0.0).unwrap();
        let scored = score_ranking(&scale, &ranked).unwrap();
        let correct = scored.pairs.iter().filter(|p| p.correct).count();
        prop_assert_eq!((correct, scored.pairs.len()), brute_pacc(&levels));
        // The library ranks adjectives in scale order; compare in that order.
        let ordered: Vec<(usize, i32)> = scale
            .adjectives()
            .map(|a| levels[NAMES.iter().position(|n| *n == a.as_str()).unwrap()])
            .collect();
        let (tau, want_tau) = (scored.tau, brute_tau_b(&ordered));
        prop_assert!(
            same(tau, want_tau, 1e-12),
            "tau {:?} vs {:?}",
            tau,
            want_tau
        );
        let (rho, want_rho) = (scored.rho, brute_rho(&ordered));
        prop_assert!(
            same(rho, want_rho, 1e-12),
            "rho {:?} vs {:?}",
            rho,
            want_rho
        );
        Ok(())
    });
    let mrr = runner.run(&prop::collection::vec(1usize..=20, 1..50), |ranks| {
        // Exact rational sum with the common denominator lcm(1..=20).
        const L: u64 = 232_792_560;
        let num: u64 = ranks.iter().map(|&r| L / r as u64).sum();
        let want = num as f64 / (L as f64 * ranks.len() as f64);
        let got = metrics::mrr(&ranks).unwrap();
        prop_assert!(close(got, want, 1e-12), "{} vs {}", got, want);
        Ok(())
    });
    let rank = runner.run(
        &(
            0i32..5,
            prop::collection::vec(prop::option::of(0i32..5), 0..12),
        ),
        |(true_score, others)| {
            let want = 1 + others
                .iter()
                .flatten()
                .filter(|&&s| s >= true_score)
                .count();
            let got = worst_rank(
                f64::from(true_score),
                others.iter().map(|s| s.map(f64::from)),
            );
            prop_assert_eq!(got, want);
            Ok(())
        },
    );
    match (ranking, mrr, rank) {
        (Ok(()), Ok(()), Ok(())) => Outcome::Pass(
            "pairwise accuracy exact, tau and rho within 1e-12 on 500 scales; MRR and worst rank match"
                .into(),
        ),
        (Err(e), _, _) => Outcome::Fail(format!("ranking metrics: {e}")),
        (_, Err(e), _) => Outcome::Fail(format!("mrr: {e}")),
        (_, _, Err(e)) => Outcome::Fail(format!("worst rank: {e}")),
    }
}

// 8. Synthetic end to end.

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let runs = [
        ("synthetic-membership.toml", "mrr"),
        ("synthetic-intensity.toml", "pacc"),
        ("synthetic-intensity-ga.toml", "pacc"),
        ("synthetic-indirect.toml", "accuracy"),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (file, key) in runs {
        match run_config(file, &[]).and_then(|r| cell(&r, key)) {
            Ok(v) => {
                ok &= v == 1.0;
                lines.push(format!("{file} {key} {v}"));
            }
            Err(e) => return Outcome::Fail(format!("{file}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(10);
    lines.push(format!("{:.2} s", elapsed.as_secs_f64()));
    check(ok, lines.join("; "))
}

// 9. Pseudo-perplexity of a uniform masked model.

fn criterion_9() -> Outcome {
    let mut runner = runner_for(1000);
    let result = runner.run(&(1e-3f64..=1.0, 1usize..=16), |(p, len)| {
        let text = vec!["tok"; len].join(" ");
        let score = UniformMaskedLm::new(p).sequence_score(&text).unwrap();
        prop_assert!(
            close(score.value(), 1.0 / p, 1e-9),
            "{} vs {}",
            score.value(),
            1.0 / p
        );
        Ok(())
    });
    let mut exhaustive = true;
    for len in 1..=16 {
        let text = vec!["w"; len].join(" ");
        for p in [0.001, 0.01, 0.1, 0.25, 0.5, 0.9, 1.0] {
            let v = UniformMaskedLm::new(p)
                .sequence_score(&text)
                .unwrap()
                .value();
            exhaustive &= close(v, 1.0 / p, 1e-9);
        }
    }
    match result {
        Ok(()) if exhaustive => Outcome::Pass("1/p within 1e-9 for lengths 1-16".into()),
        Ok(()) => Outcome::Fail("grid case outside 1e-9".into()),
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

// 10. LR baseline trained on GZ, evaluated on PVT.

fn criterion_10() -> Outcome {
    let dir = match data_dir() {
        Ok(d) => d,
        Err(e) => return Outcome::Blocked(e),
    };
    let path = |id: &str| dir.join(format!("{id}.csv")).display().to_string();
    let o = vec![
        format!("data.si.path={:?}", path("PVT")),
        format!("data.si_train=[{{ id = \"GZ\", path = {:?} }}]", path("GZ")),
    ];
    let record = match run_config("lr-gz-pvt.toml", &o) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e),
    };
    let ProbeResult::LrBaseline(run) = &record.result else {
        return Outcome::Fail("not an LR record".into());
    };
    let Some(r) = run.results.iter().find(|r| r.train_datasets == ["GZ"]) else {
        return Outcome::Fail("no GZ-trained result".into());
    };
    check(
        close(r.f1.value, 0.688, 0.05) && r.dropped_train == 4,
        format!(
            "macro-F1 {:.3} (want 0.688 ± 0.05), {} GZ items dropped (want 4)",
            r.f1.value, r.dropped_train
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    ("1  direct membership (published models)", criterion_1),
    ("2  direct intensity (published models)", criterion_2),
    ("3  minimal-pair intensity (published models)", criterion_3),
    ("4  tau/rho cross-check (published models)", criterion_4),
    ("5a loader manifests", criterion_5_loader),
    ("5b published dataset counts", criterion_5_published),
    ("6  calibration properties", criterion_6),
    ("7  metric oracles", criterion_7),
    ("8  synthetic end to end", criterion_8),
    ("9  pseudo-perplexity closed form", criterion_9),
    ("10 LR baseline GZ -> PVT", criterion_10),
];

/// Writes past the test harness's output capture so the lines always show.
fn emit(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

#[test]
fn acceptance_report() {
    let mut failed = Vec::new();
    for (name, criterion) in CRITERIA {
        let line = match criterion() {
            Outcome::Pass(d) => format!("PASS    {name}: {d}"),
            Outcome::Fail(d) => {
                failed.push(name);
                format!("FAIL    {name}: {d}")
            }
            Outcome::Blocked(d) => format!("BLOCKED {name}: {d}"),
        };
        emit(&line);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn require_pass(criterion: fn() -> Outcome) {
    match criterion() {
        Outcome::Pass(d) => emit(&format!("PASS {d}")),
        Outcome::Fail(d) => panic!("FAIL {d}"),
        Outcome::Blocked(d) => panic!("BLOCKED {d}"),
    }
}

#[test]
#[ignore = "needs published data and pretrained models"]
fn published_direct_membership() {
    require_pass(criterion_1);
}

#[test]
#[ignore = "needs published data and pretrained models"]
fn published_direct_intensity() {
    require_pass(criterion_2);
}

#[test]
#[ignore = "needs published data and pretrained models"]
fn published_minimal_pair_intensity() {
    require_pass(criterion_3);
}

#[test]
#[ignore = "needs published data and pretrained models"]
fn published_rank_correlations() {
    require_pass(criterion_4);
}

#[test]
#[ignore = "needs published data"]
fn published_dataset_counts() {
    require_pass(criterion_5_published);
}

#[test]
#[ignore = "needs published data"]
fn published_lr_baseline() {
    require_pass(criterion_10);
}
