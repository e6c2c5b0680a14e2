//! Experiment runner: loads inputs, builds the backend, executes one probe
//! and assembles a [`RunRecord`].
//!
//! Work units (seeds, scales, templates, items) run in parallel on backends
//! that declare concurrent access and sequentially otherwise. Results are
//! always collected in input order, so aggregation does not depend on
//! completion order.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use scalar_probe_core::backend::{Candidate, Embeddings};
use scalar_probe_core::direct::{
    build_dvec, intensity_from_reps, intensity_report, membership_from_reps, membership_report,
    represent, resolve_layers, IntensityMode, IntensitySetup, RepSpec, RepresentedDataset,
};
use scalar_probe_core::indirect::{
    best_template_in_dataset, intensity_minimal_pair, membership_completion,
    select_template_heldout, Template, TemplateCategory, TemplateScores,
};
use scalar_probe_core::logistic::LogisticOptions;
use scalar_probe_core::mock::{DistributionBackend, LexiconEncoder, TableScorer, UniformMaskedLm};
use scalar_probe_core::pragmatics::{
    answer_pair, build_prompt, decide, fit_calibration, lr_baseline, lr_configurations, Strategy,
};
use scalar_probe_core::representations::InContextOptions;
use scalar_probe_core::{
    Backend, BackendDescriptor, BackendError, CharSpan, ContextSet, Family, ProbeError,
    RepresentationMode, ScaleDataset, SequenceScore, SiDataset,
};

use crate::cache::{CachedBackend, DiskCache};
use crate::config::{
    BackendKind, ExperimentConfig, ManifestMode, ProbeKind, ScaleSource, TemplateChoice,
};
use crate::error::{Error, Result};
use crate::formats::{self, ManifestCheck};
use crate::process::ProcessBackend;
use crate::record::{
    CacheStats, Cell, DatasetInfo, DiversityRun, IndirectRun, LrRun, ProbeResult, RawAnswer,
    RunRecord, Summary, TemplateMetric, SCHEMA_VERSION,
};

pub type DynBackend = Box<dyn Backend + Send + Sync>;

type Contexts = BTreeMap<String, ContextSet>;

/// A scale dataset with its optional context sentences.
pub struct ScaleInput {
    pub dataset: ScaleDataset,
    pub contexts: Option<Contexts>,
}

/// Everything a run reads from disk.
#[derive(Default)]
pub struct Inputs {
    pub eval: Option<ScaleInput>,
    pub dvec_source: Option<ScaleInput>,
    pub extra: Vec<ScaleDataset>,
    pub si: Option<SiDataset>,
    pub si_train: Vec<SiDataset>,
    pub templates: Vec<Template>,
}

impl Inputs {
    pub fn scale_datasets(&self) -> Vec<&ScaleDataset> {
        self.eval
            .iter()
            .chain(self.dvec_source.iter())
            .map(|s| &s.dataset)
            .chain(self.extra.iter())
            .collect()
    }

    fn infos(&self) -> Vec<DatasetInfo> {
        let scale = |d: &ScaleDataset, role: &str| DatasetInfo {
            id: d.id().to_string(),
            role: role.to_string(),
            size: d.scales().len(),
            secondary: d.distinct_pair_count(),
        };
        let si = |d: &SiDataset, role: &str| DatasetInfo {
            id: d.id().to_string(),
            role: role.to_string(),
            size: d.items().len(),
            secondary: d.counts().1,
        };
        let mut out = Vec::new();
        out.extend(self.eval.iter().map(|s| scale(&s.dataset, "eval")));
        out.extend(
            self.dvec_source
                .iter()
                .map(|s| scale(&s.dataset, "dvec-source")),
        );
        out.extend(self.extra.iter().map(|d| scale(d, "extra")));
        out.extend(self.si.iter().map(|d| si(d, "eval")));
        out.extend(self.si_train.iter().map(|d| si(d, "train")));
        out
    }
}

fn load_scale_input(src: &ScaleSource, manifest: ManifestMode) -> Result<ScaleInput> {
    let check = match manifest {
        ManifestMode::Auto => ManifestCheck::Auto,
        ManifestMode::Skip => ManifestCheck::Skip,
    };
    let dataset = formats::load_scale_dataset(&src.scales, &src.id, check)?;
    let contexts = match &src.contexts {
        Some(p) => Some(formats::load_context_sets(p, &dataset)?),
        None => None,
    };
    Ok(ScaleInput { dataset, contexts })
}

pub fn load_inputs(config: &ExperimentConfig) -> Result<Inputs> {
    let d = &config.data;
    let si_check = || match d.manifest {
        ManifestMode::Auto => ManifestCheck::Auto,
        ManifestMode::Skip => ManifestCheck::Skip,
    };
    let mut inputs = Inputs {
        eval: d
            .eval
            .as_ref()
            .map(|s| load_scale_input(s, d.manifest))
            .transpose()?,
        dvec_source: d
            .dvec_source
            .as_ref()
            .map(|s| load_scale_input(s, d.manifest))
            .transpose()?,
        ..Inputs::default()
    };
    for s in &d.extra {
        inputs.extra.push(load_scale_input(s, d.manifest)?.dataset);
    }
    inputs.si =
        d.si.as_ref()
            .map(|s| formats::load_si_dataset(&s.path, &s.id, si_check()))
            .transpose()?;
    for s in &d.si_train {
        inputs
            .si_train
            .push(formats::load_si_dataset(&s.path, &s.id, si_check())?);
    }
    if matches!(
        config.probe,
        ProbeKind::MembershipIndirect | ProbeKind::IntensityIndirect
    ) || config
        .backend
        .as_ref()
        .is_some_and(|b| b.kind == BackendKind::ConstructionScorer)
    {
        inputs.templates = match &d.templates {
            Some(p) => formats::load_templates(p)?,
            None => formats::builtin_templates(),
        };
    }
    Ok(inputs)
}

/// Gives a backend the configured id.
struct Named {
    inner: DynBackend,
    descriptor: BackendDescriptor,
}

impl Backend for Named {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }
    fn embed_tokens(&self, text: &str, targets: &[CharSpan]) -> Result<Embeddings, BackendError> {
        self.inner.embed_tokens(text, targets)
    }
    fn fill_mask_topk(&self, text: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        self.inner.fill_mask_topk(text, k)
    }
    fn topk_next_words(&self, prefix: &str, k: usize) -> Result<Vec<Candidate>, BackendError> {
        self.inner.topk_next_words(prefix, k)
    }
    fn sequence_score(&self, text: &str) -> Result<SequenceScore, BackendError> {
        self.inner.sequence_score(text)
    }
    fn answer_probabilities(
        &self,
        prompt: &str,
        answers: &[&str],
    ) -> Result<BTreeMap<String, f64>, BackendError> {
        self.inner.answer_probabilities(prompt, answers)
    }
}

fn named(inner: DynBackend, id: Option<&str>) -> DynBackend {
    match id {
        Some(id) if id != inner.descriptor().backend_id => {
            let mut descriptor = inner.descriptor().clone();
            descriptor.backend_id = id.to_string();
            Box::new(Named { inner, descriptor })
        }
        _ => inner,
    }
}

/// Scores the gold order of every pair at perplexity 10 and the reverse at
/// 20 (both 10 for tied pairs), for every intensity template.
pub fn construction_scorer(
    datasets: &[&ScaleDataset],
    templates: &[Template],
    family: Family,
) -> TableScorer {
    let mut t = TableScorer::new(family);
    for d in datasets {
        for scale in d.scales() {
            for pair in scale.pairs() {
                let tie = pair.relation == scalar_probe_core::Relation::Equal;
                for tpl in templates
                    .iter()
                    .filter(|t| t.category == TemplateCategory::Intensity)
                {
                    let (w, s) = (pair.first.as_str(), pair.second.as_str());
                    t.insert(&tpl.instantiate(w, s), 10.0);
                    t.insert(&tpl.instantiate(s, w), if tie { 10.0 } else { 20.0 });
                }
            }
        }
    }
    t
}

pub fn build_backend(config: &ExperimentConfig, inputs: &Inputs) -> Result<DynBackend> {
    let b = config
        .backend
        .as_ref()
        .ok_or_else(|| Error::Config("backend: missing".into()))?;
    let inner: DynBackend = match b.kind {
        BackendKind::IdentityMock => Box::new(LexiconEncoder::orthogonal(
            &inputs.scale_datasets(),
            b.layers.unwrap_or(1),
        )),
        BackendKind::ConstructionScorer => Box::new(construction_scorer(
            &inputs.scale_datasets(),
            &inputs.templates,
            b.family.unwrap_or(Family::MaskedEncoder),
        )),
        BackendKind::UniformMlm => Box::new(UniformMaskedLm::new(b.p.unwrap_or(1.0))),
        BackendKind::FixedDistribution => {
            let dist: Vec<(&str, f64)> = b
                .distribution
                .iter()
                .map(|(w, p)| (w.as_str(), *p))
                .collect();
            Box::new(DistributionBackend::new(
                b.family.unwrap_or(Family::Causal),
                &dist,
            ))
        }
        BackendKind::StaticVectors => {
            let vocab: BTreeSet<String> = inputs
                .scale_datasets()
                .iter()
                .flat_map(|d| {
                    d.vocabulary()
                        .into_iter()
                        .map(str::to_string)
                        .collect::<Vec<_>>()
                })
                .collect();
            let path = b.path.as_ref().expect("validated");
            let id = b.id.clone().unwrap_or_else(|| formats::stem_id(path));
            Box::new(formats::load_static_vectors(path, &id, Some(&vocab))?)
        }
        BackendKind::NgramTable => {
            let path = b.path.as_ref().expect("validated");
            let id = b.id.clone().unwrap_or_else(|| formats::stem_id(path));
            Box::new(formats::load_ngram_table(path, &id)?)
        }
        BackendKind::Process => Box::new(ProcessBackend::spawn(&b.command, b.id.as_deref())?),
    };
    Ok(named(inner, b.id.as_deref()))
}

/// Maps `f` over `items`, in parallel when `parallel` is set. Output order
/// matches input order.
fn map_units<T, R, F>(parallel: bool, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    backend: &'a (dyn Backend + Sync),
    parallel: bool,
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn represent_dataset(
        &self,
        dataset: &ScaleDataset,
        spec: &RepSpec<'_>,
        seed: u64,
    ) -> Result<RepresentedDataset> {
        let results = map_units(self.parallel, dataset.scales(), |scale| {
            Ok(represent(self.backend, scale, spec, seed))
        })?;
        let mut out = RepresentedDataset::default();
        for (scale, r) in dataset.scales().iter().zip(results) {
            out.push(scale.id(), r)?;
        }
        Ok(out)
    }

    /// Spread over seeds; absent for a single-seed run.
    fn seed_std(&self, std: f64) -> Option<f64> {
        (self.config.seeds.len() > 1).then_some(std)
    }

    fn layers(&self) -> Result<Vec<usize>> {
        Ok(resolve_layers(
            self.config.layers.as_option(),
            self.backend.descriptor().num_layers,
        )?)
    }

    fn membership_direct(&mut self, inputs: &Inputs) -> Result<(ProbeResult, Summary)> {
        let cfg = &self.config.direct;
        let eval = inputs.eval.as_ref().expect("validated");
        let spec = match cfg.representation {
            RepresentationMode::InContext => RepSpec::InContext {
                contexts: eval.contexts.as_ref().expect("validated"),
                options: InContextOptions {
                    pooling: cfg.pooling,
                    contexts_per_run: cfg.contexts_per_run(IntensityMode::Ours),
                    shared: false,
                },
            },
            RepresentationMode::ShuffleBind => RepSpec::ShuffleBind {
                pooling: cfg.pooling,
                num_shuffles: cfg.num_shuffles,
            },
        };
        let layers = self.layers()?;
        let seeds = &self.config.seeds;
        let runs = map_units(self.parallel, seeds, |&seed| {
            let rd = self.represent_dataset(&eval.dataset, &spec, seed)?;
            let outcomes = layers
                .iter()
                .map(|&l| membership_from_reps(&eval.dataset, &rd.reps, l, cfg.variant))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok((outcomes, rd.skipped))
        })?;
        let skipped = runs.first().map(|r| r.1.clone()).unwrap_or_default();
        let per_seed: Vec<_> = runs.into_iter().map(|r| r.0).collect();
        let report = membership_report(cfg.variant, &per_seed, skipped)?;
        for s in &report.skipped {
            self.warnings
                .push(format!("skipped scale {}: {}", s.scale_id, s.reason));
        }
        for f in report
            .best_outcomes
            .iter()
            .flat_map(|o| &o.flagged)
            .take(20)
        {
            self.warnings.push(format!(
                "flagged {} on {}: {}",
                f.adjective.as_deref().unwrap_or("-"),
                f.scale_id,
                f.reason
            ));
        }
        let best = report.best_layer();
        let mut summary = self.summary(eval.dataset.id(), Some(variant_label(cfg.variant)));
        summary.cells.insert(
            "mrr".into(),
            Cell {
                mean: best.mean,
                std: self.seed_std(best.std),
                note: Some(format!("layer {}", best.layer)),
            },
        );
        Ok((ProbeResult::MembershipDirect(report), summary))
    }

    fn intensity_direct(&mut self, inputs: &Inputs) -> Result<(ProbeResult, Summary)> {
        let cfg = &self.config.direct;
        let eval = inputs.eval.as_ref().expect("validated");
        let source = inputs.dvec_source.as_ref().expect("validated");
        let setup = IntensitySetup {
            mode: cfg.mode,
            pooling: cfg.pooling,
            num_shuffles: cfg.num_shuffles,
            contexts_per_run: cfg.contexts_per_run(cfg.mode),
            eval_contexts: eval.contexts.as_ref(),
            source_contexts: source.contexts.as_ref(),
            epsilon: cfg.tie_epsilon,
        };
        let eval_spec = setup.spec(true)?;
        let source_spec = setup.spec(false)?;
        let layers = self.layers()?;
        let runs = map_units(self.parallel, &self.config.seeds, |&seed| {
            let er = self.represent_dataset(&eval.dataset, &eval_spec, seed)?;
            let sr = self.represent_dataset(&source.dataset, &source_spec, seed)?;
            let mut outcomes = Vec::with_capacity(layers.len());
            for &l in &layers {
                let dvec = build_dvec(&source.dataset, &sr.reps, eval.dataset.id(), l)?;
                outcomes.push(intensity_from_reps(
                    &eval.dataset,
                    &er.reps,
                    &dvec,
                    setup.epsilon,
                )?);
            }
            let skipped: Vec<_> = er.skipped.into_iter().chain(sr.skipped).collect();
            Ok((outcomes, skipped))
        })?;
        let skipped = runs.first().map(|r| r.1.clone()).unwrap_or_default();
        let per_seed: Vec<_> = runs.into_iter().map(|r| r.0).collect();
        let report = intensity_report(
            cfg.mode,
            eval.dataset.id(),
            source.dataset.id(),
            &per_seed,
            skipped,
        )?;
        for s in &report.skipped {
            self.warnings
                .push(format!("skipped scale {}: {}", s.scale_id, s.reason));
        }
        let best = report.best_layer();
        let mode = match cfg.mode {
            IntensityMode::Ours => "ours",
            IntensityMode::GA => "g-and-a",
        };
        let mut summary = self.summary(eval.dataset.id(), Some(mode.to_string()));
        let note = Some(format!("{} layer {}", source.dataset.id(), best.layer));
        summary.cells.insert(
            "pacc".into(),
            Cell {
                mean: best.pacc.mean,
                std: self.seed_std(best.pacc.std),
                note: note.clone(),
            },
        );
        for (key, s) in [("tau", &best.tau), ("rho", &best.rho)] {
            if let Some(s) = s {
                summary.cells.insert(
                    key.into(),
                    Cell {
                        mean: s.mean,
                        std: self.seed_std(s.std),
                        note: note.clone(),
                    },
                );
            }
        }
        Ok((ProbeResult::IntensityDirect(report), summary))
    }

    fn templates<'t>(
        &self,
        inputs: &'t Inputs,
        category: TemplateCategory,
    ) -> Result<Vec<&'t Template>> {
        let t: Vec<&Template> = inputs
            .templates
            .iter()
            .filter(|t| t.category == category)
            .collect();
        if t.is_empty() {
            return Err(Error::Config(format!(
                "no {} templates loaded",
                category.as_str()
            )));
        }
        Ok(t)
    }

    fn indirect<T, F>(
        &mut self,
        inputs: &Inputs,
        category: TemplateCategory,
        score: F,
    ) -> Result<(IndirectRun<T>, Summary)>
    where
        T: Send,
        F: Fn(&ScaleDataset, &Template) -> std::result::Result<(T, f64), ProbeError> + Sync + Send,
    {
        let eval = &inputs.eval.as_ref().expect("validated").dataset;
        let templates = self.templates(inputs, category)?;
        let mut datasets = vec![eval];
        datasets.extend(inputs.extra.iter().filter(|d| d.id() != eval.id()));
        let units: Vec<(usize, &Template)> = (0..datasets.len())
            .flat_map(|d| templates.iter().map(move |t| (d, *t)))
            .collect();
        let scored = map_units(self.parallel, &units, |&(d, t)| Ok(score(datasets[d], t)?))?;
        let mut scores = TemplateScores::default();
        let mut metrics = Vec::new();
        let mut eval_results = Vec::new();
        for (&(d, t), (result, value)) in units.iter().zip(scored) {
            scores.insert(t.id, datasets[d].id(), value);
            metrics.push(TemplateMetric {
                template_id: t.id,
                dataset_id: datasets[d].id().to_string(),
                value,
            });
            if d == 0 {
                eval_results.push(result);
            }
        }
        let best_in_dataset = best_template_in_dataset(&scores, eval.id())?;
        let held_out = if datasets.len() > 1 {
            Some(select_template_heldout(&scores, eval.id())?)
        } else {
            None
        };
        let selected = match &self.config.indirect.template {
            TemplateChoice::InDataset => best_in_dataset,
            TemplateChoice::HeldOut => held_out.expect("validated"),
            TemplateChoice::Fixed(id) => {
                if !templates.iter().any(|t| t.id == *id) {
                    return Err(Error::Config(format!(
                        "indirect.template: no {} template with id {id}",
                        category.as_str()
                    )));
                }
                *id
            }
        };
        let value = |id: u32| {
            scores
                .0
                .get(&(id, eval.id().to_string()))
                .copied()
                .unwrap_or(f64::NAN)
        };
        let mut summary = self.summary(eval.id(), None);
        summary.cells.insert(
            "accuracy".into(),
            Cell::single(value(selected), Some(format!("template {selected}"))),
        );
        summary.cells.insert(
            "accuracy.in-dataset".into(),
            Cell::single(
                value(best_in_dataset),
                Some(format!("template {best_in_dataset}")),
            ),
        );
        if let Some(h) = held_out {
            summary.cells.insert(
                "accuracy.held-out".into(),
                Cell::single(value(h), Some(format!("template {h}"))),
            );
        }
        let run = IndirectRun {
            eval_dataset: eval.id().to_string(),
            metrics,
            best_in_dataset,
            held_out,
            selected,
            eval_results,
        };
        Ok((run, summary))
    }

    fn diversity(&mut self, inputs: &Inputs) -> Result<(ProbeResult, Summary)> {
        let dataset = inputs.si.as_ref().expect("validated");
        let strategies = self.config.diversity.strategy.strategies();
        let raw = map_units(self.parallel, dataset.items(), |item| {
            let (sy, sn) = answer_pair(self.backend, &build_prompt(item).text)?;
            Ok(RawAnswer {
                item_id: item.item_id.clone(),
                gold: item.gold_label,
                sy,
                sn,
            })
        })?;
        let calibration = if strategies.contains(&Strategy::Cy) {
            Some(fit_calibration(self.backend)?)
        } else {
            None
        };
        let tuples: Vec<(String, bool, f64, f64)> = raw
            .iter()
            .map(|r| (r.item_id.clone(), r.gold, r.sy, r.sn))
            .collect();
        let mut results = Vec::new();
        let mut summary = self.summary(dataset.id(), None);
        let mut best: Option<(f64, Strategy)> = None;
        for s in strategies {
            let r = decide(dataset.id(), &tuples, s, calibration.clone())?;
            if !r.flagged.is_empty() {
                self.warnings.push(format!(
                    "{}: {} items without yes/no mass excluded: {}",
                    s.as_str(),
                    r.flagged.len(),
                    r.flagged.join(", ")
                ));
            }
            if r.f1.absent_yes || r.f1.absent_no {
                self.warnings.push(format!(
                    "{}: a class is absent from gold and predictions",
                    s.as_str()
                ));
            }
            summary
                .cells
                .insert(format!("f1.{}", s.as_str()), Cell::single(r.f1.value, None));
            if best.is_none_or(|(v, _)| r.f1.value > v) {
                best = Some((r.f1.value, s));
            }
            results.push(r);
        }
        if let Some((v, s)) = best {
            summary
                .cells
                .insert("f1".into(), Cell::single(v, Some(s.as_str().to_string())));
        }
        let run = DiversityRun {
            calibration,
            raw,
            results,
        };
        Ok((ProbeResult::Diversity(run), summary))
    }

    fn summary(&self, column: &str, variant: Option<String>) -> Summary {
        Summary {
            row: self.backend.descriptor().backend_id.clone(),
            variant,
            column: column.to_string(),
            cells: BTreeMap::new(),
        }
    }
}

/// Logistic regression over each training configuration; needs no backend.
pub fn run_lr(
    config: &ExperimentConfig,
    inputs: &Inputs,
) -> Result<(ProbeResult, Summary, Vec<String>)> {
    let mut warnings = Vec::new();
    let eval = inputs.si.as_ref().expect("validated");
    let opts = LogisticOptions {
        c: config.diversity.lr_c,
        ..LogisticOptions::default()
    };
    let train: Vec<&SiDataset> = inputs.si_train.iter().collect();
    let configs = lr_configurations(&train, eval.id());
    if configs.is_empty() {
        return Err(Error::Config(
            "data.si_train: no dataset other than the evaluated one".into(),
        ));
    }
    let mut results = Vec::new();
    let mut summary = Summary {
        row: "LR".into(),
        variant: None,
        column: eval.id().to_string(),
        cells: BTreeMap::new(),
    };
    for c in &configs {
        let r = lr_baseline(c, eval, &opts)?;
        for w in &r.warnings {
            warnings.push(format!("{}: {w}", r.train_datasets.join("+")));
        }
        summary.cells.insert(
            format!("f1.{}", r.train_datasets.join("+")),
            Cell::single(r.f1.value, None),
        );
        results.push(r);
    }
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.f1.value > results[best].f1.value {
            best = i;
        }
    }
    summary.cells.insert(
        "f1".into(),
        Cell::single(
            results[best].f1.value,
            Some(results[best].train_datasets.join("+")),
        ),
    );
    Ok((
        ProbeResult::LrBaseline(LrRun { results, best }),
        summary,
        warnings,
    ))
}

fn variant_label(v: scalar_probe_core::direct::MembershipVariant) -> String {
    match v {
        scalar_probe_core::direct::MembershipVariant::EndpointsSum => "endpoints-sum".into(),
        scalar_probe_core::direct::MembershipVariant::AllMembers => "all-members".into(),
    }
}

/// Runs one experiment with an already-built backend.
pub fn run_with_backend(
    config: &ExperimentConfig,
    inputs: &Inputs,
    backend: &(dyn Backend + Sync),
) -> Result<(ProbeResult, Summary, Vec<String>)> {
    let parallel = backend.descriptor().concurrent;
    let mut ctx = Ctx {
        config,
        backend,
        parallel,
        warnings: Vec::new(),
    };
    let (result, summary) = match config.probe {
        ProbeKind::MembershipDirect => ctx.membership_direct(inputs)?,
        ProbeKind::IntensityDirect => ctx.intensity_direct(inputs)?,
        ProbeKind::MembershipIndirect => {
            let k = config.indirect.k;
            let (run, s) = ctx.indirect(inputs, TemplateCategory::Membership, |d, t| {
                let r = membership_completion(backend, d, t, k)?;
                let acc = r.accuracy;
                Ok((r, acc))
            })?;
            (ProbeResult::MembershipIndirect(run), s)
        }
        ProbeKind::IntensityIndirect => {
            let eps = config.indirect.tie_epsilon;
            let (run, s) = ctx.indirect(inputs, TemplateCategory::Intensity, |d, t| {
                let r = intensity_minimal_pair(backend, d, t, eps)?;
                let acc = r.accuracy;
                Ok((r, acc))
            })?;
            (ProbeResult::IntensityIndirect(run), s)
        }
        ProbeKind::Diversity => ctx.diversity(inputs)?,
        ProbeKind::LrBaseline => return run_lr(config, inputs),
    };
    Ok((result, summary, ctx.warnings))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Loads inputs, builds the (optionally cached) backend and runs the probe.
/// The record is returned, not written.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    let started_at = now();
    let inputs = load_inputs(config)?;
    if config.probe == ProbeKind::LrBaseline {
        let (result, summary, warnings) = run_lr(config, &inputs)?;
        return Ok(finish(
            config, &inputs, started_at, None, None, warnings, result, summary,
        ));
    }
    let backend = build_backend(config, &inputs)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = config.workers {
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| Error::Config(format!("workers: {e}")))?
    };
    let (result, summary, warnings, cache, descriptor) = match config.effective_cache_dir() {
        Some(dir) => {
            let cached = CachedBackend::new(backend, DiskCache::open(dir)?);
            let (r, s, w) = pool.install(|| run_with_backend(config, &inputs, &cached))?;
            let stats = CacheStats {
                hits: cached.hits(),
                misses: cached.misses(),
            };
            (r, s, w, Some(stats), cached.descriptor().clone())
        }
        None => {
            let (r, s, w) = pool.install(|| run_with_backend(config, &inputs, backend.as_ref()))?;
            (r, s, w, None, backend.descriptor().clone())
        }
    };
    Ok(finish(
        config,
        &inputs,
        started_at,
        Some(descriptor),
        cache,
        warnings,
        result,
        summary,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    config: &ExperimentConfig,
    inputs: &Inputs,
    started_at: String,
    descriptor: Option<BackendDescriptor>,
    cache: Option<CacheStats>,
    warnings: Vec<String>,
    result: ProbeResult,
    summary: Summary,
) -> RunRecord {
    for w in &warnings {
        log::warn!("{w}");
    }
    RunRecord {
        schema_version: SCHEMA_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        config: config.clone(),
        backend: descriptor,
        datasets: inputs.infos(),
        started_at,
        finished_at: now(),
        cache,
        warnings,
        result,
        summary,
    }
}
