//! End-to-end experiment pipeline: run every (problem x surrogate x repeat)
//! optimisation plus per-problem static samples, extract features, compute
//! the statistical grids, and fit performance prediction models.
//!
//! Every stage is deterministic per (config, master seed): unit seeds are
//! stable hashes, parallel work is collected and sorted before writing, and
//! floats are rendered bit-exactly. Worker count never changes any output.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::store::{
    FeatureRow, ImportanceRow, ModelRow, ResultStore, StatRow, KIND_SURROGATE, KIND_TRUE,
    STATIC_LABEL,
};
use crate::features::{self, FEATURE_NAMES};
use crate::perfmodel::{self, PoolMode};
use crate::problems::{self, BiObjectiveProblem};
use crate::saea::{self, SampleSnapshot};
use crate::seeding;
use crate::stats;
use crate::surrogates::SurrogateKind;

pub struct Pipeline {
    pub config: ExperimentConfig,
    pub store: ResultStore,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub runs_executed: usize,
    pub runs_skipped: usize,
    pub statics_executed: usize,
    pub statics_skipped: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct FeatureSummary {
    pub rows: usize,
    pub median_rows: usize,
    /// units without results on disk, listed and skipped
    pub missing_units: Vec<String>,
    /// snapshots too small to extract from, listed and skipped
    pub skipped_snapshots: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct StatsSummary {
    pub rows: usize,
    pub wilcoxon_cells: usize,
    pub wilcoxon_significant: usize,
    pub mwu_cells: usize,
    pub mwu_significant: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PredictSummary {
    pub models: usize,
    /// (surrogate, sampling, reason)
    pub exclusions: Vec<(String, String, String)>,
}

struct RunUnit {
    problem: BiObjectiveProblem,
    kind: SurrogateKind,
    repeat: u32,
    seed: u64,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let store = ResultStore::new(config.out_dir.clone());
        Ok(Self { config, store })
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }

    /// The problem suite, without anchors.
    pub fn suite(&self) -> Result<Vec<BiObjectiveProblem>> {
        problems::build_suite(
            &self.config.suite.bases,
            self.config.suite.dim,
            self.config.suite.same_base_pairs,
            seeding::derive_seed(self.config.master_seed, &["suite"]),
        )
    }

    /// The suite with estimated anchors, cached in the store.
    pub fn anchored_suite(&self) -> Result<Vec<BiObjectiveProblem>> {
        let mut suite = self.suite()?;
        for problem in &mut suite {
            let manifest = match self.store.read_problem_manifest(&problem.id) {
                Ok(m) => m,
                Err(_) => {
                    let seed =
                        seeding::derive_seed(self.config.master_seed, &["anchors", &problem.id]);
                    let m = problems::estimate_anchors(
                        problem,
                        self.config.suite.anchor_samples,
                        seed,
                    )?;
                    self.store.write_problem_manifest(&m)?;
                    m
                }
            };
            problem.set_anchors(manifest.anchors())?;
        }
        Ok(suite)
    }

    fn sorted_surrogates(&self) -> Result<Vec<SurrogateKind>> {
        let mut kinds = self.config.surrogate_kinds()?;
        kinds.sort_by_key(|k| k.id());
        kinds.dedup();
        Ok(kinds)
    }

    /// Execute all runs and static samples. Without `resume`, any existing
    /// results make this refuse; with it, completed units are skipped and
    /// missing ones recomputed.
    pub fn cmd_run(&self, resume: bool) -> Result<RunSummary> {
        let start = Instant::now();
        if !resume {
            let runs = self.store.root().join("runs");
            let statics = self.store.root().join(STATIC_LABEL);
            if runs.exists() || statics.exists() {
                return Err(Error::Store(
                    "existing results in the output directory; pass --resume to continue".into(),
                ));
            }
        }
        std::fs::create_dir_all(self.store.root())?;

        let suite = self.anchored_suite()?;
        let kinds = self.sorted_surrogates()?;

        let mut units: Vec<RunUnit> = Vec::new();
        let mut skipped = 0usize;
        for problem in &suite {
            for &kind in &kinds {
                for repeat in 0..self.config.repeats {
                    if resume && self.store.run_complete(&problem.id, kind, repeat) {
                        skipped += 1;
                        continue;
                    }
                    units.push(RunUnit {
                        problem: problem.clone(),
                        kind,
                        repeat,
                        seed: self.config.run_seed(&problem.id, kind, repeat),
                    });
                }
            }
        }
        let mut static_units: Vec<&BiObjectiveProblem> = Vec::new();
        let mut statics_skipped = 0usize;
        for problem in &suite {
            if resume && self.store.static_complete(&problem.id) {
                statics_skipped += 1;
            } else {
                static_units.push(problem);
            }
        }

        let pool = self.pool()?;
        let executed = units.len();
        pool.install(|| -> Result<()> {
            units.par_iter().try_for_each(|unit| -> Result<()> {
                let config = self.config.saea_config(unit.seed, unit.repeat);
                let log = saea::run_saea(&unit.problem, unit.kind, &config)?;
                self.store.write_run(&log)
            })?;
            static_units.par_iter().try_for_each(|problem| -> Result<()> {
                let seed =
                    seeding::derive_seed(self.config.master_seed, &["static", &problem.id]);
                let snapshot = saea::run_static_sample(problem, self.config.static_size(), seed)?;
                self.store.write_static(&snapshot, seed)
            })
        })?;

        let summary = RunSummary {
            runs_executed: executed,
            runs_skipped: skipped,
            statics_executed: static_units.len(),
            statics_skipped,
            wall_time: start.elapsed(),
        };

        let manifest = json!({
            "config": serde_json::to_value(&self.config)?,
            "version": env!("CARGO_PKG_VERSION"),
            "runs": suite.iter().flat_map(|p| {
                kinds.iter().flat_map(move |k| {
                    (0..self.config.repeats).map(move |r| json!({
                        "problem": p.id,
                        "surrogate": k.id(),
                        "repeat": r,
                        "seed": self.config.run_seed(&p.id, *k, r),
                    }))
                })
            }).collect::<Vec<_>>(),
            "wall_time_s": summary.wall_time.as_secs_f64(),
        });
        self.store.write_experiment_manifest(&manifest)?;
        Ok(summary)
    }

    /// Extract per-snapshot feature vectors (both fitness kinds for
    /// temporal snapshots, true only for static samples), then write the
    /// raw rows and their medians over repeats.
    pub fn cmd_features(&self) -> Result<FeatureSummary> {
        let dim = self.config.suite.dim;
        let params = self.config.feature_params()?;
        let suite = self.suite()?;
        let kinds = self.sorted_surrogates()?;
        let master = self.config.master_seed;

        enum Task {
            Temporal { problem: String, kind: SurrogateKind, repeat: u32 },
            Static { problem: String },
        }
        let mut tasks = Vec::new();
        let mut missing = Vec::new();
        for problem in &suite {
            for &kind in &kinds {
                for repeat in 0..self.config.repeats {
                    if self.store.run_complete(&problem.id, kind, repeat) {
                        tasks.push(Task::Temporal { problem: problem.id.clone(), kind, repeat });
                    } else {
                        missing.push(format!("{}/{}/{}", problem.id, kind.id(), repeat));
                    }
                }
            }
            if self.store.static_complete(&problem.id) {
                tasks.push(Task::Static { problem: problem.id.clone() });
            } else {
                missing.push(format!("{STATIC_LABEL}/{}", problem.id));
            }
        }

        let pool = self.pool()?;
        let results: Vec<(Vec<FeatureRow>, Vec<String>)> = pool.install(|| {
            tasks
                .par_iter()
                .map(|task| -> Result<(Vec<FeatureRow>, Vec<String>)> {
                    let mut rows = Vec::new();
                    let mut skipped = Vec::new();
                    let mut emit = |snapshot: &SampleSnapshot,
                                    surrogate_label: &str,
                                    fitness: &str|
                     -> Result<()> {
                        let (xs, fs) = snapshot.fitness_matrix(fitness == KIND_SURROGATE)?;
                        let mut rng = seeding::stream(
                            master,
                            &[
                                "features",
                                &snapshot.problem_id,
                                surrogate_label,
                                &snapshot.repeat.to_string(),
                                &snapshot.checkpoint_fe.to_string(),
                                fitness,
                            ],
                        );
                        match features::extract_features(&xs, &fs, &params, &mut rng) {
                            Ok(fv) => rows.push(FeatureRow {
                                problem: snapshot.problem_id.clone(),
                                surrogate: surrogate_label.to_string(),
                                repeat: snapshot.repeat,
                                checkpoint: snapshot.checkpoint_fe,
                                fitness: fitness.to_string(),
                                values: fv.as_array(),
                            }),
                            Err(Error::SnapshotTooSmall { .. }) => skipped.push(format!(
                                "{}/{}/{}@{}",
                                snapshot.problem_id,
                                surrogate_label,
                                snapshot.repeat,
                                snapshot.checkpoint_fe
                            )),
                            Err(e) => return Err(e),
                        }
                        Ok(())
                    };
                    match task {
                        Task::Temporal { problem, kind, repeat } => {
                            let snapshots =
                                self.store.read_run_snapshots(problem, *kind, *repeat, dim)?;
                            for snapshot in &snapshots {
                                emit(snapshot, kind.id(), KIND_TRUE)?;
                                emit(snapshot, kind.id(), KIND_SURROGATE)?;
                            }
                        }
                        Task::Static { problem } => {
                            let snapshot = self.store.read_static_snapshot(problem, dim)?;
                            emit(&snapshot, STATIC_LABEL, KIND_TRUE)?;
                        }
                    }
                    Ok((rows, skipped))
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut rows: Vec<FeatureRow> = Vec::new();
        let mut skipped_snapshots = Vec::new();
        for (r, s) in results {
            rows.extend(r);
            skipped_snapshots.extend(s);
        }
        rows.sort_by(|a, b| {
            (&a.problem, &a.surrogate, a.repeat, a.checkpoint, &a.fitness)
                .cmp(&(&b.problem, &b.surrogate, b.repeat, b.checkpoint, &b.fitness))
        });
        skipped_snapshots.sort();
        self.store.write_features_csv("features.csv", &rows, true)?;

        // medians over repeats, one row per (problem, surrogate, checkpoint, kind)
        let mut groups: BTreeMap<(String, String, usize, String), Vec<[Option<f64>; 28]>> =
            BTreeMap::new();
        for row in &rows {
            groups
                .entry((
                    row.problem.clone(),
                    row.surrogate.clone(),
                    row.checkpoint,
                    row.fitness.clone(),
                ))
                .or_default()
                .push(row.values);
        }
        let medians: Vec<FeatureRow> = groups
            .into_iter()
            .map(|((problem, surrogate, checkpoint, fitness), group)| {
                let mut values = [None; 28];
                for (c, value) in values.iter_mut().enumerate() {
                    let present: Vec<f64> = group.iter().filter_map(|v| v[c]).collect();
                    if present.len() == group.len() {
                        *value = stats::median(&present);
                    }
                }
                FeatureRow { problem, surrogate, repeat: 0, checkpoint, fitness, values }
            })
            .collect();
        self.store.write_features_csv("features_median.csv", &medians, false)?;

        Ok(FeatureSummary {
            rows: rows.len(),
            median_rows: medians.len(),
            missing_units: missing,
            skipped_snapshots,
        })
    }

    /// The statistical grids over the median features: paired true-vs-
    /// surrogate Wilcoxon, Spearman, and normalized median differences per
    /// (feature, surrogate, checkpoint), plus the static-vs-temporal
    /// Mann-Whitney grid per (feature, checkpoint) with the temporal side
    /// pooled over surrogates. Bonferroni correction applies per grid.
    pub fn cmd_stats(&self) -> Result<StatsSummary> {
        let medians = self.store.read_features_csv("features_median.csv", false)?;
        let mut index: BTreeMap<(String, String, usize, String), [Option<f64>; 28]> =
            BTreeMap::new();
        let mut problem_set: Vec<String> = Vec::new();
        for row in &medians {
            if !problem_set.contains(&row.problem) {
                problem_set.push(row.problem.clone());
            }
            index.insert(
                (row.problem.clone(), row.surrogate.clone(), row.checkpoint, row.fitness.clone()),
                row.values,
            );
        }
        problem_set.sort();
        let kinds = self.sorted_surrogates()?;
        let checkpoints = &self.config.saea.checkpoints;

        struct Cell {
            feature: &'static str,
            surrogate: String,
            checkpoint: usize,
            statistic: Option<f64>,
            p: Option<f64>,
        }

        // paired grids, true vs surrogate per surrogate and checkpoint
        let mut wilcoxon_cells = Vec::new();
        let mut spearman_cells = Vec::new();
        let mut median_cells = Vec::new();
        for kind in &kinds {
            for &cp in checkpoints {
                for (f, name) in FEATURE_NAMES.iter().enumerate() {
                    let mut true_vals = Vec::new();
                    let mut surr_vals = Vec::new();
                    for problem in &problem_set {
                        let t = index
                            .get(&(problem.clone(), kind.id().to_string(), cp, KIND_TRUE.into()))
                            .and_then(|v| v[f]);
                        let s = index
                            .get(&(
                                problem.clone(),
                                kind.id().to_string(),
                                cp,
                                KIND_SURROGATE.into(),
                            ))
                            .and_then(|v| v[f]);
                        if let (Some(t), Some(s)) = (t, s) {
                            true_vals.push(t);
                            surr_vals.push(s);
                        }
                    }
                    let (w_stat, w_p) = if true_vals.is_empty() {
                        (None, None)
                    } else {
                        let r = stats::wilcoxon_signed_rank(&true_vals, &surr_vals)?;
                        (Some(r.statistic), Some(r.p_value))
                    };
                    wilcoxon_cells.push(Cell {
                        feature: name,
                        surrogate: kind.id().to_string(),
                        checkpoint: cp,
                        statistic: w_stat,
                        p: w_p,
                    });
                    let rho = if true_vals.len() >= 3 {
                        stats::spearman(&true_vals, &surr_vals)?
                    } else {
                        None
                    };
                    spearman_cells.push(Cell {
                        feature: name,
                        surrogate: kind.id().to_string(),
                        checkpoint: cp,
                        statistic: rho,
                        p: None,
                    });
                    let diff = if true_vals.is_empty() {
                        None
                    } else {
                        Some(stats::median_difference_normalized(&true_vals, &surr_vals)?)
                    };
                    median_cells.push(Cell {
                        feature: name,
                        surrogate: kind.id().to_string(),
                        checkpoint: cp,
                        statistic: diff,
                        p: None,
                    });
                }
            }
        }

        // static versus temporal, true features pooled over surrogates
        let mut mwu_cells = Vec::new();
        for &cp in checkpoints {
            for (f, name) in FEATURE_NAMES.iter().enumerate() {
                let mut static_vals = Vec::new();
                let mut temporal_vals = Vec::new();
                for problem in &problem_set {
                    if let Some(v) = index
                        .get(&(problem.clone(), STATIC_LABEL.into(), 0, KIND_TRUE.into()))
                        .and_then(|v| v[f])
                    {
                        static_vals.push(v);
                    }
                    for kind in &kinds {
                        if let Some(v) = index
                            .get(&(problem.clone(), kind.id().to_string(), cp, KIND_TRUE.into()))
                            .and_then(|v| v[f])
                        {
                            temporal_vals.push(v);
                        }
                    }
                }
                let (stat, p) = if static_vals.is_empty() || temporal_vals.is_empty() {
                    (None, None)
                } else {
                    let r = stats::mann_whitney_u(&static_vals, &temporal_vals)?;
                    (Some(r.statistic), Some(r.p_value))
                };
                mwu_cells.push(Cell {
                    feature: name,
                    surrogate: "all".to_string(),
                    checkpoint: cp,
                    statistic: stat,
                    p,
                });
            }
        }

        // Bonferroni per grid, over the tests actually performed
        let correct = |cells: &[Cell]| -> Result<Vec<Option<bool>>> {
            let ps: Vec<f64> = cells.iter().filter_map(|c| c.p).collect();
            if ps.is_empty() {
                return Ok(cells.iter().map(|_| None).collect());
            }
            let flags = stats::bonferroni(&ps, 0.05)?;
            let mut it = flags.into_iter();
            Ok(cells.iter().map(|c| c.p.map(|_| it.next().unwrap())).collect())
        };
        let wilcoxon_flags = correct(&wilcoxon_cells)?;
        let mwu_flags = correct(&mwu_cells)?;

        let mut rows: Vec<StatRow> = Vec::new();
        let mut summary = StatsSummary::default();
        for (cell, flag) in wilcoxon_cells.iter().zip(&wilcoxon_flags) {
            if cell.p.is_some() {
                summary.wilcoxon_cells += 1;
                if flag.unwrap_or(false) {
                    summary.wilcoxon_significant += 1;
                }
            }
            rows.push(StatRow {
                feature: cell.feature.to_string(),
                surrogate: cell.surrogate.clone(),
                checkpoint: cell.checkpoint,
                test: "wilcoxon".into(),
                statistic: cell.statistic,
                p: cell.p,
                significant: *flag,
            });
        }
        for cell in &spearman_cells {
            rows.push(StatRow {
                feature: cell.feature.to_string(),
                surrogate: cell.surrogate.clone(),
                checkpoint: cell.checkpoint,
                test: "spearman".into(),
                statistic: cell.statistic,
                p: None,
                significant: None,
            });
        }
        for cell in &median_cells {
            rows.push(StatRow {
                feature: cell.feature.to_string(),
                surrogate: cell.surrogate.clone(),
                checkpoint: cell.checkpoint,
                test: "median_diff".into(),
                statistic: cell.statistic,
                p: None,
                significant: None,
            });
        }
        for (cell, flag) in mwu_cells.iter().zip(&mwu_flags) {
            if cell.p.is_some() {
                summary.mwu_cells += 1;
                if flag.unwrap_or(false) {
                    summary.mwu_significant += 1;
                }
            }
            rows.push(StatRow {
                feature: cell.feature.to_string(),
                surrogate: cell.surrogate.clone(),
                checkpoint: cell.checkpoint,
                test: "mwu_static_temporal".into(),
                statistic: cell.statistic,
                p: cell.p,
                significant: *flag,
            });
        }
        summary.rows = rows.len();
        self.store.write_stats_csv(&rows)?;
        Ok(summary)
    }

    /// Performance prediction per surrogate and sampling point. The static
    /// sampling column always uses the static sample's true features; the
    /// pool mode governs the temporal columns.
    pub fn cmd_predict(&self, mode: PoolMode) -> Result<PredictSummary> {
        let medians = self.store.read_features_csv("features_median.csv", false)?;
        let mut index: BTreeMap<(String, String, usize, String), [Option<f64>; 28]> =
            BTreeMap::new();
        let mut problem_set: Vec<String> = Vec::new();
        for row in &medians {
            if !problem_set.contains(&row.problem) {
                problem_set.push(row.problem.clone());
            }
            index.insert(
                (row.problem.clone(), row.surrogate.clone(), row.checkpoint, row.fitness.clone()),
                row.values,
            );
        }
        problem_set.sort();
        let kinds = self.sorted_surrogates()?;
        let forest = self.config.forest_config();

        let mut model_rows = Vec::new();
        let mut importance_rows = Vec::new();
        let mut exclusions = Vec::new();

        for kind in &kinds {
            // per-problem median final hypervolume over the repeats
            let mut targets: BTreeMap<String, f64> = BTreeMap::new();
            for problem in &problem_set {
                let mut finals = Vec::new();
                for repeat in 0..self.config.repeats {
                    if let Ok(m) = self.store.read_unit_manifest(problem, *kind, repeat) {
                        finals.push(m.final_hypervolume);
                    }
                }
                if let Some(median) = stats::median(&finals) {
                    targets.insert(problem.clone(), median);
                }
            }

            let mut samplings: Vec<(String, Option<usize>)> = self
                .config
                .saea
                .checkpoints
                .iter()
                .map(|&cp| (cp.to_string(), Some(cp)))
                .collect();
            samplings.push((STATIC_LABEL.to_string(), None));

            for (sampling, checkpoint) in &samplings {
                let mut exclude = |reason: String, exclusions: &mut Vec<(String, String, String)>| {
                    exclusions.push((kind.id().to_string(), sampling.clone(), reason));
                };

                let mut ids = Vec::new();
                let mut true_feats: Vec<Vec<Option<f64>>> = Vec::new();
                let mut surr_feats: Vec<Vec<Option<f64>>> = Vec::new();
                let mut target_vec = Vec::new();
                for problem in &problem_set {
                    let Some(&target) = targets.get(problem) else { continue };
                    let (t, s) = match checkpoint {
                        Some(cp) => (
                            index.get(&(
                                problem.clone(),
                                kind.id().to_string(),
                                *cp,
                                KIND_TRUE.into(),
                            )),
                            index.get(&(
                                problem.clone(),
                                kind.id().to_string(),
                                *cp,
                                KIND_SURROGATE.into(),
                            )),
                        ),
                        None => (
                            index.get(&(problem.clone(), STATIC_LABEL.into(), 0, KIND_TRUE.into())),
                            None,
                        ),
                    };
                    let Some(t) = t else { continue };
                    ids.push(problem.clone());
                    true_feats.push(t.to_vec());
                    if let Some(s) = s {
                        surr_feats.push(s.to_vec());
                    }
                    target_vec.push(target);
                }
                if ids.len() < problem_set.len() {
                    exclude(
                        format!("features or targets missing for {} problems", problem_set.len() - ids.len()),
                        &mut exclusions,
                    );
                    continue;
                }

                // the static sample has no surrogate landscape
                let effective_mode = if checkpoint.is_none() { PoolMode::TrueOnly } else { mode };
                let surr_opt = (effective_mode != PoolMode::TrueOnly).then_some(surr_feats.as_slice());
                let dataset = match perfmodel::build_dataset(
                    &ids,
                    &FEATURE_NAMES,
                    Some(&true_feats),
                    surr_opt,
                    &target_vec,
                    effective_mode,
                ) {
                    Ok(d) => d,
                    Err(e) => {
                        exclude(e.to_string(), &mut exclusions);
                        continue;
                    }
                };

                let rfe_seed = seeding::derive_seed(
                    self.config.master_seed,
                    &["rfe", mode.id(), kind.id(), sampling],
                );
                let selection = match perfmodel::rfe_select(
                    &dataset,
                    self.config.model.max_features,
                    self.config.model.rfe_iterations,
                    &forest,
                    rfe_seed,
                ) {
                    Ok(s) => s,
                    Err(e) => {
                        exclude(e.to_string(), &mut exclusions);
                        continue;
                    }
                };
                let eval_seed = seeding::derive_seed(
                    self.config.master_seed,
                    &["eval", mode.id(), kind.id(), sampling],
                );
                let report = match perfmodel::bootstrap_evaluate(
                    &dataset,
                    &selection.selected,
                    self.config.model.eval_iterations,
                    &forest,
                    eval_seed,
                ) {
                    Ok(r) => r,
                    Err(e) => {
                        exclude(e.to_string(), &mut exclusions);
                        continue;
                    }
                };

                let selected_label = report
                    .selected
                    .iter()
                    .map(|c| c.label())
                    .collect::<Vec<_>>()
                    .join(";");
                model_rows.push(ModelRow {
                    mode: mode.id().to_string(),
                    surrogate: kind.id().to_string(),
                    sampling: sampling.clone(),
                    selected: selected_label,
                    mean: report.mean,
                    median: report.median,
                    std_err: report.std_err,
                });
                for (column, &importance) in
                    report.selected.iter().zip(&report.importance_medians)
                {
                    importance_rows.push(ImportanceRow {
                        mode: mode.id().to_string(),
                        surrogate: kind.id().to_string(),
                        sampling: sampling.clone(),
                        feature: column.name.clone(),
                        provenance: column.provenance.tag().to_string(),
                        importance,
                    });
                }
            }
        }

        self.store.write_models_csv(&model_rows)?;
        self.store.write_importances_csv(&importance_rows)?;
        if let Ok(mut manifest) = self.store.read_experiment_manifest() {
            manifest[format!("predict_exclusions_{}", mode.id())] = json!(exclusions
                .iter()
                .map(|(s, c, r)| json!({"surrogate": s, "sampling": c, "reason": r}))
                .collect::<Vec<_>>());
            self.store.write_experiment_manifest(&manifest)?;
        }
        Ok(PredictSummary { models: model_rows.len(), exclusions })
    }

    /// Human-readable digest of whatever the store currently holds.
    pub fn cmd_report(&self) -> Result<String> {
        use std::fmt::Write as _;
        let mut out = String::new();
        let suite = self.suite()?;
        let kinds = self.sorted_surrogates()?;
        writeln!(out, "experiment at {}", self.store.root().display()).ok();
        writeln!(
            out,
            "suite: {} problems, dim {}, {} surrogates, {} repeats",
            suite.len(),
            self.config.suite.dim,
            kinds.len(),
            self.config.repeats
        )
        .ok();

        let mut complete = 0usize;
        let total = suite.len() * kinds.len() * self.config.repeats as usize;
        writeln!(out, "\nmedian final hypervolume per problem and surrogate:").ok();
        write!(out, "{:<28}", "problem").ok();
        for kind in &kinds {
            write!(out, "{:>14}", kind.id()).ok();
        }
        writeln!(out).ok();
        for problem in &suite {
            write!(out, "{:<28}", problem.id).ok();
            for kind in &kinds {
                let mut finals = Vec::new();
                for repeat in 0..self.config.repeats {
                    if let Ok(m) = self.store.read_unit_manifest(&problem.id, *kind, repeat) {
                        finals.push(m.final_hypervolume);
                        complete += 1;
                    }
                }
                match stats::median(&finals) {
                    Some(hv) => write!(out, "{hv:>14.4}").ok(),
                    None => write!(out, "{:>14}", "-").ok(),
                };
            }
            writeln!(out).ok();
        }
        writeln!(out, "\nruns complete: {complete}/{total}").ok();
        for name in ["features.csv", "features_median.csv", "stats.csv", "models.csv"] {
            let path = self.store.root().join(name);
            match std::fs::read_to_string(&path) {
                Ok(text) => {
                    writeln!(out, "{name}: {} rows", text.lines().count().saturating_sub(1)).ok()
                }
                Err(_) => writeln!(out, "{name}: absent").ok(),
            };
        }
        Ok(out)
    }
}
