//! Algorithm performance prediction: from-scratch random-forest regression
//! with impurity importances, bootstrapped recursive feature elimination,
//! and bootstrapped pseudo-R2 evaluation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;
use crate::stats;

/// Whether a feature column was measured on the true or the surrogate
/// landscape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TrueLandscape,
    SurrogateLandscape,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::TrueLandscape => "true",
            Provenance::SurrogateLandscape => "surrogate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureColumn {
    pub name: String,
    pub provenance: Provenance,
}

impl FeatureColumn {
    pub fn label(&self) -> String {
        format!("{}:{}", self.provenance.tag(), self.name)
    }
}

/// One modelling table: rows are problems, the target is the median
/// normalized final hypervolume.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<FeatureColumn>,
    /// row-major feature values, no missing entries
    pub rows: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub row_ids: Vec<String>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// candidate features per split; None derives max(1, n_cols / 3)
    pub mtry: Option<usize>,
    /// nodes at or below this size become leaves
    pub min_node: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 500, mtry: None, min_node: 5 }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
    /// total impurity (RSS) decrease per feature across this tree's splits
    importance: Vec<f64>,
    root_rss: f64,
    leaf_rss: f64,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Telescoping identity: the summed split decreases equal root RSS
    /// minus total leaf RSS.
    pub fn impurity_identity_gap(&self) -> f64 {
        let total: f64 = self.importance.iter().sum();
        total - (self.root_rss - self.leaf_rss)
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub mtry: usize,
    pub min_node: usize,
    /// per-feature impurity decrease, totalled per tree and averaged over
    /// trees
    pub importances: Vec<f64>,
    pub seed: u64,
}

impl ForestModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

struct TreeBuilder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    features: &'a [usize],
    mtry: usize,
    min_node: usize,
}

fn rss_of(ys: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let sum: f64 = idx.iter().map(|&i| ys[i]).sum();
    let sumsq: f64 = idx.iter().map(|&i| ys[i] * ys[i]).sum();
    (sumsq - sum * sum / n).max(0.0)
}

impl TreeBuilder<'_> {
    fn build<R: Rng>(&self, sample: Vec<usize>, rng: &mut R) -> Tree {
        let mut tree = Tree {
            nodes: Vec::new(),
            importance: vec![0.0; self.xs[0].len()],
            root_rss: rss_of(self.ys, &sample),
            leaf_rss: 0.0,
        };
        self.grow(sample, &mut tree, rng);
        tree
    }

    fn grow<R: Rng>(&self, idx: Vec<usize>, tree: &mut Tree, rng: &mut R) -> usize {
        let lo = idx.iter().map(|&i| self.ys[i]).fold(f64::INFINITY, f64::min);
        let hi = idx.iter().map(|&i| self.ys[i]).fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            // constant node: the exact value, no impurity left
            tree.nodes.push(Node::Leaf { value: lo });
            return tree.nodes.len() - 1;
        }
        let node_rss = rss_of(self.ys, &idx);
        let mean = idx.iter().map(|&i| self.ys[i]).sum::<f64>() / idx.len() as f64;
        if idx.len() <= self.min_node || node_rss <= 0.0 {
            tree.leaf_rss += node_rss;
            tree.nodes.push(Node::Leaf { value: mean });
            return tree.nodes.len() - 1;
        }

        // draw mtry candidate features without replacement
        let mut pool = self.features.to_vec();
        let mut candidates = Vec::with_capacity(self.mtry);
        for _ in 0..self.mtry.min(pool.len()) {
            let pick = rng.random_range(0..pool.len());
            candidates.push(pool.swap_remove(pick));
        }

        let mut best: Option<(f64, usize, f64)> = None; // (child rss, feature, threshold)
        for &feature in &candidates {
            let mut values: Vec<(f64, f64)> =
                idx.iter().map(|&i| (self.xs[i][feature], self.ys[i])).collect();
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let total_sum: f64 = values.iter().map(|v| v.1).sum();
            let total_sumsq: f64 = values.iter().map(|v| v.1 * v.1).sum();
            let n = values.len();
            let mut left_sum = 0.0;
            let mut left_sumsq = 0.0;
            for split in 1..n {
                left_sum += values[split - 1].1;
                left_sumsq += values[split - 1].1 * values[split - 1].1;
                if values[split].0 == values[split - 1].0 {
                    continue;
                }
                let nl = split as f64;
                let nr = (n - split) as f64;
                let rss_l = (left_sumsq - left_sum * left_sum / nl).max(0.0);
                let right_sum = total_sum - left_sum;
                let right_sumsq = total_sumsq - left_sumsq;
                let rss_r = (right_sumsq - right_sum * right_sum / nr).max(0.0);
                let child = rss_l + rss_r;
                if best.as_ref().map_or(true, |(b, _, _)| child < *b) {
                    let threshold = 0.5 * (values[split - 1].0 + values[split].0);
                    best = Some((child, feature, threshold));
                }
            }
        }

        let Some((child_rss, feature, threshold)) = best else {
            // all candidate features constant on this node
            tree.leaf_rss += node_rss;
            tree.nodes.push(Node::Leaf { value: mean });
            return tree.nodes.len() - 1;
        };

        tree.importance[feature] += (node_rss - child_rss).max(0.0);
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.xs[i][feature] <= threshold);
        let slot = tree.nodes.len();
        tree.nodes.push(Node::Leaf { value: mean }); // placeholder
        let left = self.grow(left_idx, tree, rng);
        let right = self.grow(right_idx, tree, rng);
        tree.nodes[slot] = Node::Split { feature, threshold, left, right };
        slot
    }
}

/// Fit a random forest on a row/column subset of the dataset. Every tree
/// trains on a with-replacement bootstrap of the subset rows, of the same
/// size.
pub fn fit_forest_on(
    dataset: &Dataset,
    rows: &[usize],
    columns: &[usize],
    config: &ForestConfig,
    seed: u64,
) -> Result<ForestModel> {
    if rows.is_empty() || columns.is_empty() {
        return Err(Error::Config("forest fit needs rows and columns".into()));
    }
    if config.n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let mtry = config.mtry.unwrap_or_else(|| (columns.len() / 3).max(1)).min(columns.len());
    let builder = TreeBuilder {
        xs: &dataset.rows,
        ys: &dataset.target,
        features: columns,
        mtry,
        min_node: config.min_node,
    };
    let trees: Vec<Tree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::stream(seed, &["tree", &t.to_string()]);
            let sample: Vec<usize> =
                (0..rows.len()).map(|_| rows[rng.random_range(0..rows.len())]).collect();
            builder.build(sample, &mut rng)
        })
        .collect();
    let n_features = dataset.n_cols();
    let mut importances = vec![0.0; n_features];
    for tree in &trees {
        for f in 0..n_features {
            importances[f] += tree.importance[f];
        }
    }
    for v in &mut importances {
        *v /= trees.len() as f64;
    }
    Ok(ForestModel { trees, mtry, min_node: config.min_node, importances, seed })
}

/// Fit on all rows and columns.
pub fn fit_forest(dataset: &Dataset, config: &ForestConfig, seed: u64) -> Result<ForestModel> {
    let rows: Vec<usize> = (0..dataset.n_rows()).collect();
    let columns: Vec<usize> = (0..dataset.n_cols()).collect();
    fit_forest_on(dataset, &rows, &columns, config, seed)
}

/// 1 - MSE/var(y), clamped below at zero.
pub fn pseudo_r2(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() || y.len() < 2 {
        return Err(Error::Config("pseudo r2 needs equal lengths >= 2".into()));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(Error::UndefinedMetric("pseudo r2 with zero target variance".into()));
    }
    let mse = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    Ok((1.0 - mse / var).max(0.0))
}

fn rmse(y: &[f64], y_hat: &[f64]) -> f64 {
    let n = y.len() as f64;
    (y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone)]
pub struct RfeResult {
    /// selected column indices, ordered by selection frequency
    pub selected: Vec<usize>,
    /// per-column count of winning-subset membership across iterations
    pub frequency: Vec<usize>,
}

/// Bootstrapped recursive feature elimination. Per iteration: resample rows
/// with replacement, rank features by forest importance, evaluate the
/// nested top-1..top-max subsets by out-of-bag RMSE, and record the winning
/// subset. The final selection is the `max_features` columns with the
/// highest winning frequency.
pub fn rfe_select(
    dataset: &Dataset,
    max_features: usize,
    iterations: usize,
    config: &ForestConfig,
    seed: u64,
) -> Result<RfeResult> {
    if max_features == 0 {
        return Err(Error::Config("rfe needs max_features >= 1".into()));
    }
    if dataset.n_rows() < 10 {
        return Err(Error::SampleTooSmall(dataset.n_rows()));
    }
    let n_cols = dataset.n_cols();
    if n_cols <= max_features {
        // nothing to eliminate
        return Ok(RfeResult { selected: (0..n_cols).collect(), frequency: vec![iterations; n_cols] });
    }
    if iterations == 0 {
        return Err(Error::Config("rfe needs iterations >= 1".into()));
    }

    let n = dataset.n_rows();
    let winners: Vec<Vec<usize>> = (0..iterations)
        .into_par_iter()
        .map(|iter| {
            let mut rng = seeding::stream(seed, &["rfe", &iter.to_string()]);
            let inbag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut seen = vec![false; n];
            for &i in &inbag {
                seen[i] = true;
            }
            let oob: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();
            if oob.is_empty() {
                return Vec::new();
            }
            let all_cols: Vec<usize> = (0..n_cols).collect();
            let rank_seed = seeding::derive_seed(seed, &["rfe-rank", &iter.to_string()]);
            let ranking_fit = fit_forest_on(dataset, &inbag, &all_cols, config, rank_seed)
                .expect("non-empty fit");
            let mut ranked: Vec<usize> = all_cols.clone();
            ranked.sort_by(|&a, &b| {
                ranking_fit.importances[b]
                    .partial_cmp(&ranking_fit.importances[a])
                    .unwrap()
                    .then(a.cmp(&b))
            });

            let oob_y: Vec<f64> = oob.iter().map(|&i| dataset.target[i]).collect();
            let mut best: Option<(f64, Vec<usize>)> = None;
            for size in 1..=max_features {
                let subset: Vec<usize> = ranked[..size].to_vec();
                let sub_seed =
                    seeding::derive_seed(seed, &["rfe-sub", &iter.to_string(), &size.to_string()]);
                let fit = fit_forest_on(dataset, &inbag, &subset, config, sub_seed)
                    .expect("non-empty fit");
                let pred: Vec<f64> = oob.iter().map(|&i| fit.predict(&dataset.rows[i])).collect();
                let err = rmse(&oob_y, &pred);
                if best.as_ref().map_or(true, |(b, _)| err < *b) {
                    best = Some((err, subset));
                }
            }
            best.map(|(_, s)| s).unwrap_or_default()
        })
        .collect();

    let mut frequency = vec![0usize; n_cols];
    for winner in &winners {
        for &c in winner {
            frequency[c] += 1;
        }
    }
    let mut order: Vec<usize> = (0..n_cols).collect();
    order.sort_by(|&a, &b| frequency[b].cmp(&frequency[a]).then(a.cmp(&b)));
    let selected: Vec<usize> =
        order.into_iter().take(max_features).filter(|&c| frequency[c] > 0).collect();
    if selected.is_empty() {
        return Err(Error::Config("rfe selected no features (no out-of-bag rows?)".into()));
    }
    Ok(RfeResult { selected, frequency })
}

/// Bootstrap-evaluated model quality over a fixed feature subset.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub mean: f64,
    pub median: f64,
    /// standard deviation of the bootstrap metric distribution
    pub std_err: f64,
    pub iterations: usize,
    pub selected: Vec<FeatureColumn>,
    /// per selected feature, median importance over iterations
    pub importance_medians: Vec<f64>,
}

impl EvalReport {
    /// "mean | median (standard error)" with three decimals.
    pub fn r2_cell(&self) -> String {
        format!("{:.3} | {:.3} ({:.3})", self.mean, self.median, self.std_err)
    }
}

/// Per iteration: random 80/20 row split, forest fit on the training side
/// over the selected columns, clamped pseudo-R2 on the validation side.
pub fn bootstrap_evaluate(
    dataset: &Dataset,
    selected: &[usize],
    iterations: usize,
    config: &ForestConfig,
    seed: u64,
) -> Result<EvalReport> {
    if selected.is_empty() {
        return Err(Error::Config("bootstrap evaluation needs selected features".into()));
    }
    if dataset.n_rows() < 10 {
        return Err(Error::SampleTooSmall(dataset.n_rows()));
    }
    if iterations == 0 {
        return Err(Error::Config("bootstrap evaluation needs iterations >= 1".into()));
    }
    let n = dataset.n_rows();
    let n_val = (n / 5).max(1);

    let outcomes: Vec<(f64, Vec<f64>)> = (0..iterations)
        .into_par_iter()
        .map(|iter| {
            let mut rng = seeding::stream(seed, &["eval", &iter.to_string()]);
            let mut order: Vec<usize> = (0..n).collect();
            // Fisher-Yates
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            let (val, train) = order.split_at(n_val);
            let fit_seed = seeding::derive_seed(seed, &["eval-fit", &iter.to_string()]);
            let fit = fit_forest_on(dataset, train, selected, config, fit_seed)
                .expect("non-empty fit");
            let y: Vec<f64> = val.iter().map(|&i| dataset.target[i]).collect();
            let y_hat: Vec<f64> = val.iter().map(|&i| fit.predict(&dataset.rows[i])).collect();
            let r2 = match pseudo_r2(&y, &y_hat) {
                Ok(v) => v,
                // a constant validation slice explains itself or nothing
                Err(_) => {
                    if rmse(&y, &y_hat) == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            let imp: Vec<f64> = selected.iter().map(|&c| fit.importances[c]).collect();
            (r2, imp)
        })
        .collect();

    let r2s: Vec<f64> = outcomes.iter().map(|(r, _)| *r).collect();
    let mean = r2s.iter().sum::<f64>() / r2s.len() as f64;
    let median = stats::median(&r2s).unwrap();
    let std_err = if r2s.len() < 2 {
        0.0
    } else {
        (r2s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r2s.len() - 1) as f64).sqrt()
    };
    let importance_medians: Vec<f64> = (0..selected.len())
        .map(|c| {
            let per_iter: Vec<f64> = outcomes.iter().map(|(_, imp)| imp[c]).collect();
            stats::median(&per_iter).unwrap()
        })
        .collect();

    Ok(EvalReport {
        mean,
        median,
        std_err,
        iterations,
        selected: selected.iter().map(|&c| dataset.columns[c].clone()).collect(),
        importance_medians,
    })
}

/// Candidate feature pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    Both,
    SurrogateOnly,
    TrueOnly,
}

impl PoolMode {
    pub fn id(self) -> &'static str {
        match self {
            PoolMode::Both => "both",
            PoolMode::SurrogateOnly => "surrogate",
            PoolMode::TrueOnly => "true",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "both" => Ok(PoolMode::Both),
            "surrogate" => Ok(PoolMode::SurrogateOnly),
            "true" => Ok(PoolMode::TrueOnly),
            other => Err(Error::Config(format!("unknown pool mode `{other}`"))),
        }
    }
}

/// Join per-problem median feature vectors with per-problem targets into a
/// modelling table. Feature columns containing missing values are dropped
/// (the filtering contract); problems lacking features or a target are a
/// join error; a zero-variance target rejects the dataset.
pub fn build_dataset(
    problem_ids: &[String],
    feature_names: &[&str],
    true_features: Option<&[Vec<Option<f64>>]>,
    surrogate_features: Option<&[Vec<Option<f64>>]>,
    targets: &[f64],
    mode: PoolMode,
) -> Result<Dataset> {
    let n = problem_ids.len();
    if n == 0 {
        return Err(Error::Config("dataset needs at least one problem".into()));
    }
    if targets.len() != n {
        return Err(Error::JoinError("target count differs from problem count".into()));
    }
    let want_true = mode != PoolMode::SurrogateOnly;
    let want_surr = mode != PoolMode::TrueOnly;
    if want_true && true_features.is_none() {
        return Err(Error::JoinError("true-landscape features unavailable".into()));
    }
    if want_surr && surrogate_features.is_none() {
        return Err(Error::JoinError("surrogate-landscape features unavailable".into()));
    }

    let first = targets[0];
    if targets.iter().all(|t| *t == first) {
        return Err(Error::ZeroVarianceTarget(format!("all targets equal {first}")));
    }

    let mut columns = Vec::new();
    let mut raw: Vec<Vec<Option<f64>>> = vec![Vec::new(); n];
    let append = |source: &[Vec<Option<f64>>], provenance: Provenance, columns: &mut Vec<FeatureColumn>, raw: &mut Vec<Vec<Option<f64>>>| -> Result<()> {
        if source.len() != n {
            return Err(Error::JoinError(format!(
                "{} feature rows for {n} problems",
                source.len()
            )));
        }
        for (f, name) in feature_names.iter().enumerate() {
            columns.push(FeatureColumn { name: (*name).to_string(), provenance });
            for (row, values) in raw.iter_mut().zip(source) {
                row.push(values[f]);
            }
        }
        Ok(())
    };
    if want_true {
        append(true_features.unwrap(), Provenance::TrueLandscape, &mut columns, &mut raw)?;
    }
    if want_surr {
        append(surrogate_features.unwrap(), Provenance::SurrogateLandscape, &mut columns, &mut raw)?;
    }

    // drop any column with a missing entry
    let keep: Vec<usize> =
        (0..columns.len()).filter(|&c| raw.iter().all(|row| row[c].is_some())).collect();
    if keep.is_empty() {
        return Err(Error::DegenerateFeatureMatrix);
    }
    let columns: Vec<FeatureColumn> = keep.iter().map(|&c| columns[c].clone()).collect();
    let rows: Vec<Vec<f64>> =
        raw.iter().map(|row| keep.iter().map(|&c| row[c].unwrap()).collect()).collect();

    Ok(Dataset { columns, rows, target: targets.to_vec(), row_ids: problem_ids.to_vec() })
}
