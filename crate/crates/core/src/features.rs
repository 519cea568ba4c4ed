//! The 28 multi-objective landscape features, computed on a sampled set of
//! solutions under one fixed k-nearest-neighbour index. Both objectives are
//! minimized. Features whose inputs are degenerate (single-point fronts,
//! zero-variance correlation inputs, fewer than two Pareto local optima)
//! come back missing rather than fabricated.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moea::{dominates, nondominated_indices, nondominated_sort};
use crate::stats;

/// Canonical feature order used everywhere (CSV columns, filtering).
pub const FEATURE_NAMES: [&str; 28] = [
    "f_cor",
    "dist_x_avg",
    "dist_x_max",
    "dist_f_avg",
    "dist_f_max",
    "nd_n",
    "supp_n",
    "rank_avg",
    "rank_max",
    "rank_ent",
    "slo_n",
    "plo_n",
    "plo_dist_max",
    "sup_avg_neig",
    "inf_avg_neig",
    "inc_avg_neig",
    "lnd_avg_neig",
    "lsupp_avg_neig",
    "dist_x_avg_neig",
    "dist_f_avg_neig",
    "diff_f_avg_neig",
    "sup_cor_neig",
    "inf_cor_neig",
    "dist_x_cor_neig",
    "dist_f_cor_neig",
    "diff_f_cor_neig",
    "length_aws",
    "eval_aws",
];

/// All-pairs distance statistics switch to a seeded pair subsample above
/// this sample size.
const EXACT_PAIRS_LIMIT: usize = 4000;
const SUBSAMPLE_PAIRS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub f_cor: Option<f64>,
    pub dist_x_avg: Option<f64>,
    pub dist_x_max: Option<f64>,
    pub dist_f_avg: Option<f64>,
    pub dist_f_max: Option<f64>,
    pub nd_n: Option<f64>,
    pub supp_n: Option<f64>,
    pub rank_avg: Option<f64>,
    pub rank_max: Option<f64>,
    pub rank_ent: Option<f64>,
    pub slo_n: Option<f64>,
    pub plo_n: Option<f64>,
    pub plo_dist_max: Option<f64>,
    pub sup_avg_neig: Option<f64>,
    pub inf_avg_neig: Option<f64>,
    pub inc_avg_neig: Option<f64>,
    pub lnd_avg_neig: Option<f64>,
    pub lsupp_avg_neig: Option<f64>,
    pub dist_x_avg_neig: Option<f64>,
    pub dist_f_avg_neig: Option<f64>,
    pub diff_f_avg_neig: Option<f64>,
    pub sup_cor_neig: Option<f64>,
    pub inf_cor_neig: Option<f64>,
    pub dist_x_cor_neig: Option<f64>,
    pub dist_f_cor_neig: Option<f64>,
    pub diff_f_cor_neig: Option<f64>,
    pub length_aws: Option<f64>,
    pub eval_aws: Option<f64>,
}

impl FeatureVector {
    pub fn as_array(&self) -> [Option<f64>; 28] {
        [
            self.f_cor,
            self.dist_x_avg,
            self.dist_x_max,
            self.dist_f_avg,
            self.dist_f_max,
            self.nd_n,
            self.supp_n,
            self.rank_avg,
            self.rank_max,
            self.rank_ent,
            self.slo_n,
            self.plo_n,
            self.plo_dist_max,
            self.sup_avg_neig,
            self.inf_avg_neig,
            self.inc_avg_neig,
            self.lnd_avg_neig,
            self.lsupp_avg_neig,
            self.dist_x_avg_neig,
            self.dist_f_avg_neig,
            self.diff_f_avg_neig,
            self.sup_cor_neig,
            self.inf_cor_neig,
            self.dist_x_cor_neig,
            self.dist_f_cor_neig,
            self.diff_f_cor_neig,
            self.length_aws,
            self.eval_aws,
        ]
    }

    pub fn from_array(values: [Option<f64>; 28]) -> Self {
        Self {
            f_cor: values[0],
            dist_x_avg: values[1],
            dist_x_max: values[2],
            dist_f_avg: values[3],
            dist_f_max: values[4],
            nd_n: values[5],
            supp_n: values[6],
            rank_avg: values[7],
            rank_max: values[8],
            rank_ent: values[9],
            slo_n: values[10],
            plo_n: values[11],
            plo_dist_max: values[12],
            sup_avg_neig: values[13],
            inf_avg_neig: values[14],
            inc_avg_neig: values[15],
            lnd_avg_neig: values[16],
            lsupp_avg_neig: values[17],
            dist_x_avg_neig: values[18],
            dist_f_avg_neig: values[19],
            diff_f_avg_neig: values[20],
            sup_cor_neig: values[21],
            inf_cor_neig: values[22],
            dist_x_cor_neig: values[23],
            dist_f_cor_neig: values[24],
            diff_f_cor_neig: values[25],
            length_aws: values[26],
            eval_aws: values[27],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = FEATURE_NAMES.iter().position(|n| *n == name)?;
        self.as_array()[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrKind {
    Spearman,
    Pearson,
}

/// How to aggregate pairwise distances among Pareto local optima.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PloDistStat {
    Max,
    Avg,
}

#[derive(Debug, Clone)]
pub struct FeatureParams {
    /// neighbourhood size; None derives min(2 * dim, m - 1)
    pub k_neig: Option<usize>,
    pub n_walks: usize,
    pub corr: CorrKind,
    pub plo_dist: PloDistStat,
    /// compute walk features as exact expectations over the full walk
    /// distribution instead of sampling n_walks walks
    pub exact_walks: bool,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            k_neig: None,
            n_walks: 30,
            corr: CorrKind::Spearman,
            plo_dist: PloDistStat::Max,
            exact_walks: false,
        }
    }
}

/// k nearest neighbours per point by Euclidean x-distance, ties by index;
/// a point is never its own neighbour.
#[derive(Debug, Clone)]
pub struct NeighborhoodIndex {
    pub k: usize,
    pub neighbors: Vec<Vec<usize>>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dist_f(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    (d0 * d0 + d1 * d1).sqrt()
}

pub fn build_neighborhood(xs: &[Vec<f64>], k: usize) -> NeighborhoodIndex {
    let m = xs.len();
    let k = k.min(m.saturating_sub(1));
    let neighbors = (0..m)
        .map(|i| {
            let mut order: Vec<(f64, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| (euclid(&xs[i], &xs[j]), j))
                .collect();
            order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            order.truncate(k);
            order.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    NeighborhoodIndex { k, neighbors }
}

/// Which of a set of mutually non-dominated points are supported, i.e.
/// optimal for some strictly positive weighted sum. These are the points on
/// the lower-left convex hull of the front; collinear hull points count.
pub fn supported_flags(front: &[[f64; 2]]) -> Vec<bool> {
    if front.is_empty() {
        return Vec::new();
    }
    let mut unique: Vec<[f64; 2]> = front.to_vec();
    unique.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    unique.dedup();
    let hull: Vec<[f64; 2]> = if unique.len() <= 2 {
        unique
    } else {
        let mut hull: Vec<[f64; 2]> = Vec::with_capacity(unique.len());
        for &p in &unique {
            while hull.len() >= 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                let cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]);
                if cross < 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull
    };
    front.iter().map(|p| hull.iter().any(|h| h == p)).collect()
}

struct PairStats {
    x_avg: f64,
    x_max: f64,
    f_avg: f64,
    f_max: f64,
}

fn pair_stats(xs: &[Vec<f64>], fs: &[[f64; 2]]) -> Option<PairStats> {
    let m = xs.len();
    if m < 2 {
        return None;
    }
    let mut x_sum = 0.0;
    let mut x_max = 0.0f64;
    let mut f_sum = 0.0;
    let mut f_max = 0.0f64;
    let mut count = 0usize;
    if m <= EXACT_PAIRS_LIMIT {
        for i in 0..m {
            for j in (i + 1)..m {
                let dx = euclid(&xs[i], &xs[j]);
                let df = dist_f(fs[i], fs[j]);
                x_sum += dx;
                f_sum += df;
                x_max = x_max.max(dx);
                f_max = f_max.max(df);
                count += 1;
            }
        }
    } else {
        // seeded subsample, independent of the caller's walk stream
        let mut rng = ChaCha8Rng::seed_from_u64(0x7061_6972 ^ m as u64);
        for _ in 0..SUBSAMPLE_PAIRS {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            let dx = euclid(&xs[i], &xs[j]);
            let df = dist_f(fs[i], fs[j]);
            x_sum += dx;
            f_sum += df;
            x_max = x_max.max(dx);
            f_max = f_max.max(df);
            count += 1;
        }
    }
    Some(PairStats {
        x_avg: x_sum / count as f64,
        x_max,
        f_avg: f_sum / count as f64,
        f_max,
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn correlate(kind: CorrKind, a: &[f64], b: &[f64]) -> Option<f64> {
    match kind {
        CorrKind::Spearman => stats::spearman(a, b).ok().flatten(),
        CorrKind::Pearson => stats::pearson(a, b),
    }
}

struct WalkOutcome {
    length: f64,
    evals: f64,
}

/// Expected walk length and inspected-neighbour count from each start,
/// computed by memoized recursion over the (acyclic) strict-dominance moves.
fn exact_walk_expectations(
    index: &NeighborhoodIndex,
    dominating: &[Vec<usize>],
) -> Vec<WalkOutcome> {
    fn solve(
        i: usize,
        index: &NeighborhoodIndex,
        dominating: &[Vec<usize>],
        memo: &mut Vec<Option<(f64, f64)>>,
    ) -> (f64, f64) {
        if let Some(v) = memo[i] {
            return v;
        }
        let inspected = index.neighbors[i].len() as f64;
        let out = if dominating[i].is_empty() {
            (0.0, inspected)
        } else {
            let mut len_acc = 0.0;
            let mut eval_acc = 0.0;
            for &j in &dominating[i] {
                let (l, e) = solve(j, index, dominating, memo);
                len_acc += l;
                eval_acc += e;
            }
            let deg = dominating[i].len() as f64;
            (1.0 + len_acc / deg, inspected + eval_acc / deg)
        };
        memo[i] = Some(out);
        out
    }

    let m = index.neighbors.len();
    let mut memo = vec![None; m];
    (0..m)
        .map(|i| {
            let (length, evals) = solve(i, index, dominating, &mut memo);
            WalkOutcome { length, evals }
        })
        .collect()
}

fn sampled_walks<R: Rng>(
    index: &NeighborhoodIndex,
    dominating: &[Vec<usize>],
    n_walks: usize,
    rng: &mut R,
) -> Vec<WalkOutcome> {
    let m = index.neighbors.len();
    (0..n_walks)
        .map(|_| {
            let mut current = rng.random_range(0..m);
            let mut length = 0.0;
            let mut evals = 0.0;
            loop {
                evals += index.neighbors[current].len() as f64;
                let moves = &dominating[current];
                if moves.is_empty() {
                    break;
                }
                current = moves[rng.random_range(0..moves.len())];
                length += 1.0;
            }
            WalkOutcome { length, evals }
        })
        .collect()
}

/// Compute all 28 features of one sample under one neighbourhood index.
/// `xs` are decision vectors, `fs` the chosen fitness values. The rng is
/// consumed only by the sampled adaptive walks.
pub fn extract_features<R: Rng>(
    xs: &[Vec<f64>],
    fs: &[[f64; 2]],
    params: &FeatureParams,
    rng: &mut R,
) -> Result<FeatureVector> {
    let m = xs.len();
    if m != fs.len() || m == 0 {
        return Err(Error::Config("feature extraction needs matching non-empty inputs".into()));
    }
    let dim = xs[0].len();
    let k = params.k_neig.unwrap_or_else(|| (2 * dim).min(m.saturating_sub(1))).max(1);
    if m < k + 1 {
        return Err(Error::SnapshotTooSmall { needed: k + 1, found: m });
    }
    let index = build_neighborhood(xs, k);

    let mut out = FeatureVector::default();

    // objective correlation
    let f1: Vec<f64> = fs.iter().map(|f| f[0]).collect();
    let f2: Vec<f64> = fs.iter().map(|f| f[1]).collect();
    out.f_cor = correlate(params.corr, &f1, &f2);

    // all-pairs distances
    if let Some(p) = pair_stats(xs, fs) {
        out.dist_x_avg = Some(p.x_avg);
        out.dist_x_max = Some(p.x_max);
        out.dist_f_avg = Some(p.f_avg);
        out.dist_f_max = Some(p.f_max);
    }

    // domination ranks
    let ranks = nondominated_sort(fs);
    let nd_count = ranks.iter().filter(|&&r| r == 1).count();
    out.nd_n = Some(nd_count as f64 / m as f64);
    out.rank_avg = Some(ranks.iter().map(|&r| r as f64).sum::<f64>() / m as f64);
    let rank_max = *ranks.iter().max().unwrap();
    out.rank_max = Some(rank_max as f64);
    let mut histogram = vec![0usize; rank_max];
    for &r in &ranks {
        histogram[r - 1] += 1;
    }
    out.rank_ent = Some(
        histogram
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / m as f64;
                -p * p.ln()
            })
            .sum(),
    );

    // supported share of the non-dominated front
    if nd_count >= 2 {
        let front: Vec<[f64; 2]> = (0..m).filter(|&i| ranks[i] == 1).map(|i| fs[i]).collect();
        let supported = supported_flags(&front).iter().filter(|&&s| s).count();
        out.supp_n = Some(supported as f64 / nd_count as f64);
    }

    // single-objective local optima, per objective
    let mut slo_acc = 0.0;
    for o in 0..2 {
        let optima = (0..m)
            .filter(|&i| index.neighbors[i].iter().all(|&j| fs[i][o] <= fs[j][o]))
            .count();
        slo_acc += optima as f64 / m as f64;
    }
    out.slo_n = Some(slo_acc / 2.0);

    // Pareto local optima
    let plo: Vec<usize> = (0..m)
        .filter(|&i| !index.neighbors[i].iter().any(|&j| dominates(fs[j], fs[i])))
        .collect();
    out.plo_n = Some(plo.len() as f64 / m as f64);
    if plo.len() >= 2 {
        let mut acc = 0.0f64;
        let mut max = 0.0f64;
        let mut count = 0usize;
        for (a, &i) in plo.iter().enumerate() {
            for &j in &plo[a + 1..] {
                let d = euclid(&xs[i], &xs[j]);
                acc += d;
                max = max.max(d);
                count += 1;
            }
        }
        out.plo_dist_max = Some(match params.plo_dist {
            PloDistStat::Max => max,
            PloDistStat::Avg => acc / count as f64,
        });
    }

    // per-point neighbourhood quantities
    let mut sup = vec![0.0f64; m];
    let mut inf = vec![0.0f64; m];
    let mut inc = vec![0.0f64; m];
    let mut lnd = vec![0.0f64; m];
    let mut lsupp = vec![0.0f64; m];
    let mut dxn = vec![0.0f64; m];
    let mut dfn = vec![0.0f64; m];
    let mut dff = vec![0.0f64; m];
    for i in 0..m {
        let neigh = &index.neighbors[i];
        let kn = neigh.len() as f64;
        let mut n_sup = 0usize;
        let mut n_inf = 0usize;
        let mut dx_acc = 0.0;
        let mut df_acc = 0.0;
        let mut diff_acc = 0.0;
        for &j in neigh {
            if dominates(fs[j], fs[i]) {
                n_sup += 1;
            } else if dominates(fs[i], fs[j]) {
                n_inf += 1;
            }
            dx_acc += euclid(&xs[i], &xs[j]);
            df_acc += dist_f(fs[i], fs[j]);
            diff_acc += ((fs[i][0] - fs[j][0]).abs() + (fs[i][1] - fs[j][1]).abs()) / 2.0;
        }
        sup[i] = n_sup as f64 / kn;
        inf[i] = n_inf as f64 / kn;
        inc[i] = (neigh.len() - n_sup - n_inf) as f64 / kn;
        dxn[i] = dx_acc / kn;
        dfn[i] = df_acc / kn;
        dff[i] = diff_acc / kn;

        let local: Vec<[f64; 2]> = neigh.iter().map(|&j| fs[j]).collect();
        let local_nd = nondominated_indices(&local);
        lnd[i] = local_nd.len() as f64 / kn;
        let front: Vec<[f64; 2]> = local_nd.iter().map(|&q| local[q]).collect();
        let supported = supported_flags(&front).iter().filter(|&&s| s).count();
        lsupp[i] = supported as f64 / kn;
    }
    out.sup_avg_neig = Some(mean(&sup));
    out.inf_avg_neig = Some(mean(&inf));
    out.inc_avg_neig = Some(mean(&inc));
    out.lnd_avg_neig = Some(mean(&lnd));
    out.lsupp_avg_neig = Some(mean(&lsupp));
    out.dist_x_avg_neig = Some(mean(&dxn));
    out.dist_f_avg_neig = Some(mean(&dfn));
    out.diff_f_avg_neig = Some(mean(&dff));

    // correlation between each point's quantity and its neighbours' mean
    let neighbour_means = |values: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                index.neighbors[i].iter().map(|&j| values[j]).sum::<f64>()
                    / index.neighbors[i].len() as f64
            })
            .collect()
    };
    out.sup_cor_neig = correlate(params.corr, &sup, &neighbour_means(&sup));
    out.inf_cor_neig = correlate(params.corr, &inf, &neighbour_means(&inf));
    out.dist_x_cor_neig = correlate(params.corr, &dxn, &neighbour_means(&dxn));
    out.dist_f_cor_neig = correlate(params.corr, &dfn, &neighbour_means(&dfn));
    out.diff_f_cor_neig = correlate(params.corr, &dff, &neighbour_means(&dff));

    // adaptive walks over strictly dominating neighbours
    let dominating: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            index.neighbors[i]
                .iter()
                .copied()
                .filter(|&j| dominates(fs[j], fs[i]))
                .collect()
        })
        .collect();
    let outcomes = if params.exact_walks {
        exact_walk_expectations(&index, &dominating)
    } else {
        if params.n_walks == 0 {
            return Err(Error::Config("sampled walks need n_walks >= 1".into()));
        }
        sampled_walks(&index, &dominating, params.n_walks, rng)
    };
    let lengths: Vec<f64> = outcomes.iter().map(|w| w.length).collect();
    let evals: Vec<f64> = outcomes.iter().map(|w| w.evals).collect();
    out.length_aws = Some(mean(&lengths));
    out.eval_aws = Some(mean(&evals));

    validate_ranges(&out)?;
    Ok(out)
}

/// Range invariants checked after every extraction: proportions in [0,1],
/// correlations in [-1,1], entropy and distances non-negative.
pub fn validate_ranges(fv: &FeatureVector) -> Result<()> {
    let in_unit = |v: Option<f64>| v.map_or(true, |x| (0.0..=1.0).contains(&x));
    let is_corr = |v: Option<f64>| v.map_or(true, |x| (-1.0..=1.0).contains(&x));
    let non_negative = |v: Option<f64>| v.map_or(true, |x| x >= 0.0);
    let ok = in_unit(fv.nd_n)
        && in_unit(fv.supp_n)
        && in_unit(fv.slo_n)
        && in_unit(fv.plo_n)
        && in_unit(fv.sup_avg_neig)
        && in_unit(fv.inf_avg_neig)
        && in_unit(fv.inc_avg_neig)
        && in_unit(fv.lnd_avg_neig)
        && in_unit(fv.lsupp_avg_neig)
        && is_corr(fv.f_cor)
        && is_corr(fv.sup_cor_neig)
        && is_corr(fv.inf_cor_neig)
        && is_corr(fv.dist_x_cor_neig)
        && is_corr(fv.dist_f_cor_neig)
        && is_corr(fv.diff_f_cor_neig)
        && non_negative(fv.rank_ent)
        && non_negative(fv.dist_x_avg)
        && non_negative(fv.dist_x_max)
        && non_negative(fv.dist_f_avg)
        && non_negative(fv.dist_f_max)
        && non_negative(fv.dist_x_avg_neig)
        && non_negative(fv.dist_f_avg_neig)
        && non_negative(fv.diff_f_avg_neig)
        && non_negative(fv.plo_dist_max)
        && non_negative(fv.length_aws)
        && non_negative(fv.eval_aws);
    if ok {
        Ok(())
    } else {
        Err(Error::UndefinedMetric("feature value out of range".into()))
    }
}

/// Result of dropping feature columns that contain missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredFeatures {
    /// canonical indices of surviving columns
    pub kept: Vec<usize>,
    pub dropped: Vec<&'static str>,
    /// dense rows over the surviving columns, canonical order
    pub rows: Vec<Vec<f64>>,
}

/// Drop every feature column containing any missing value; surviving
/// columns keep their canonical order.
pub fn filter_features(rows: &[FeatureVector]) -> Result<FilteredFeatures> {
    if rows.is_empty() {
        return Err(Error::Config("feature filtering needs at least one row".into()));
    }
    let arrays: Vec<[Option<f64>; 28]> = rows.iter().map(|r| r.as_array()).collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for col in 0..28 {
        if arrays.iter().all(|row| row[col].is_some()) {
            kept.push(col);
        } else {
            dropped.push(FEATURE_NAMES[col]);
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateFeatureMatrix);
    }
    let rows = arrays
        .iter()
        .map(|row| kept.iter().map(|&c| row[c].unwrap()).collect())
        .collect();
    Ok(FilteredFeatures { kept, dropped, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    fn grid_sample(m: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<[f64; 2]>) {
        let mut rng = seeding::stream(seed, &["sample"]);
        let xs: Vec<Vec<f64>> =
            (0..m).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let fs: Vec<[f64; 2]> = xs
            .iter()
            .map(|x| {
                let s: f64 = x.iter().map(|v| v * v).sum();
                let t: f64 = x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum();
                [s, t]
            })
            .collect();
        (xs, fs)
    }

    #[test]
    fn anti_monotone_objectives_make_everything_nondominated() {
        let mut rng = seeding::stream(40, &["anti"]);
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let fs: Vec<[f64; 2]> = (0..12).map(|i| [i as f64, -(i as f64)]).collect();
        let params = FeatureParams { k_neig: Some(3), ..Default::default() };
        let fv = extract_features(&xs, &fs, &params, &mut rng).unwrap();
        assert_eq!(fv.f_cor, Some(-1.0));
        assert_eq!(fv.nd_n, Some(1.0));
        assert_eq!(fv.rank_ent, Some(0.0));
        assert_eq!(fv.rank_avg, Some(1.0));
        assert_eq!(fv.rank_max, Some(1.0));
    }

    #[test]
    fn one_dominator_with_full_neighbourhood() {
        // point 0 dominates everything; k = m - 1
        let m = 6;
        let xs: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64]).collect();
        let mut fs = vec![[0.0, 0.0]];
        for i in 1..m {
            fs.push([i as f64, i as f64]);
        }
        let params = FeatureParams {
            k_neig: Some(m - 1),
            exact_walks: true,
            ..Default::default()
        };
        let mut rng = seeding::stream(41, &["dom"]);
        let fv = extract_features(&xs, &fs, &params, &mut rng).unwrap();
        assert_eq!(fv.plo_n, Some(1.0 / m as f64));
        // a walk from the dominator has length 0; from anywhere else every
        // walk ends at the dominator after some moves, so lengths >= 1
        assert!(fv.length_aws.unwrap() > 0.0);
        // with k = m-1, Pareto-local equals Pareto-global
        assert_eq!(fv.plo_n, fv.nd_n);
    }

    #[test]
    fn plo_equals_nd_under_global_neighbourhood() {
        let (xs, fs) = grid_sample(40, 3, 42);
        let params = FeatureParams { k_neig: Some(39), ..Default::default() };
        let mut rng = seeding::stream(42, &["plo"]);
        let fv = extract_features(&xs, &fs, &params, &mut rng).unwrap();
        assert_eq!(fv.plo_n, fv.nd_n);
    }

    #[test]
    fn rank_entropy_zero_iff_single_rank() {
        let mut rng = seeding::stream(43, &["ent"]);
        let (xs, fs) = grid_sample(30, 2, 7);
        let params = FeatureParams { k_neig: Some(5), ..Default::default() };
        let fv = extract_features(&xs, &fs, &params, &mut rng).unwrap();
        let single_rank = fv.rank_max == Some(1.0);
        assert_eq!(fv.rank_ent == Some(0.0), single_rank);
    }

    #[test]
    fn dominance_features_invariant_under_monotone_transform() {
        let (xs, fs) = grid_sample(25, 2, 9);
        let transformed: Vec<[f64; 2]> = fs.iter().map(|f| [f[0].exp(), f[1]]).collect();
        let params = FeatureParams { k_neig: Some(6), exact_walks: true, ..Default::default() };
        let mut rng1 = seeding::stream(44, &["m1"]);
        let mut rng2 = seeding::stream(44, &["m1"]);
        let a = extract_features(&xs, &fs, &params, &mut rng1).unwrap();
        let b = extract_features(&xs, &transformed, &params, &mut rng2).unwrap();
        // dominance is order-invariant
        assert_eq!(a.nd_n, b.nd_n);
        assert_eq!(a.supp_n, b.supp_n); // hull membership can differ in general,
                                        // but stays equal when transforms are convex on this data
        assert_eq!(a.rank_avg, b.rank_avg);
        assert_eq!(a.rank_max, b.rank_max);
        assert_eq!(a.rank_ent, b.rank_ent);
        assert_eq!(a.slo_n, b.slo_n);
        assert_eq!(a.plo_n, b.plo_n);
        assert_eq!(a.plo_dist_max, b.plo_dist_max);
        assert_eq!(a.sup_avg_neig, b.sup_avg_neig);
        assert_eq!(a.inf_avg_neig, b.inf_avg_neig);
        assert_eq!(a.inc_avg_neig, b.inc_avg_neig);
        assert_eq!(a.lnd_avg_neig, b.lnd_avg_neig);
        assert_eq!(a.length_aws, b.length_aws);
        assert_eq!(a.eval_aws, b.eval_aws);
    }

    #[test]
    fn x_based_features_ignore_the_fitness_kind() {
        let (xs, fs) = grid_sample(30, 3, 11);
        let other: Vec<[f64; 2]> = fs.iter().map(|f| [f[1] * 3.0 + 1.0, f[0] - 2.0]).collect();
        let params = FeatureParams { k_neig: Some(6), ..Default::default() };
        let mut rng1 = seeding::stream(45, &["x1"]);
        let mut rng2 = seeding::stream(45, &["x1"]);
        let a = extract_features(&xs, &fs, &params, &mut rng1).unwrap();
        let b = extract_features(&xs, &other, &params, &mut rng2).unwrap();
        assert_eq!(a.dist_x_avg, b.dist_x_avg);
        assert_eq!(a.dist_x_max, b.dist_x_max);
        assert_eq!(a.dist_x_avg_neig, b.dist_x_avg_neig);
        assert_eq!(a.dist_x_cor_neig, b.dist_x_cor_neig);
    }

    #[test]
    fn extraction_is_deterministic() {
        let (xs, fs) = grid_sample(50, 4, 13);
        let params = FeatureParams::default();
        let mut rng1 = seeding::stream(46, &["d"]);
        let mut rng2 = seeding::stream(46, &["d"]);
        let a = extract_features(&xs, &fs, &params, &mut rng1).unwrap();
        let b = extract_features(&xs, &fs, &params, &mut rng2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ranges_hold_on_random_samples() {
        for seed in 0..10 {
            let (xs, fs) = grid_sample(25, 3, 100 + seed);
            let params = FeatureParams { k_neig: Some(4), ..Default::default() };
            let mut rng = seeding::stream(seed, &["rng"]);
            let fv = extract_features(&xs, &fs, &params, &mut rng).unwrap();
            validate_ranges(&fv).unwrap();
            let s = fv.sup_avg_neig.unwrap() + fv.inf_avg_neig.unwrap() + fv.inc_avg_neig.unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small_snapshot_is_rejected() {
        let (xs, fs) = grid_sample(4, 2, 1);
        let params = FeatureParams { k_neig: Some(4), ..Default::default() };
        let mut rng = seeding::stream(47, &["s"]);
        match extract_features(&xs, &fs, &params, &mut rng) {
            Err(Error::SnapshotTooSmall { needed: 5, found: 4 }) => {}
            other => panic!("expected SnapshotTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn filter_keeps_complete_columns_in_canonical_order() {
        let (xs, fs) = grid_sample(20, 2, 3);
        let params = FeatureParams { k_neig: Some(4), ..Default::default() };
        let mut rng = seeding::stream(48, &["f"]);
        let full = extract_features(&xs, &fs, &params, &mut rng).unwrap();

        // identity on a complete matrix
        if full.as_array().iter().all(|v| v.is_some()) {
            let filtered = filter_features(&[full, full]).unwrap();
            assert_eq!(filtered.kept.len(), 28);
            assert!(filtered.dropped.is_empty());
        }

        // craft three missing columns and expect exactly those dropped
        let mut broken = full;
        broken.supp_n = None;
        broken.plo_dist_max = None;
        broken.f_cor = None;
        let filtered = filter_features(&[full, broken]).unwrap();
        assert_eq!(filtered.dropped, vec!["f_cor", "supp_n", "plo_dist_max"]);
        assert_eq!(filtered.kept.len(), 25);
        assert_eq!(filtered.rows.len(), 2);
        assert_eq!(filtered.rows[0].len(), 25);

        // all-missing matrix is degenerate
        let empty = FeatureVector::default();
        assert!(matches!(filter_features(&[empty]), Err(Error::DegenerateFeatureMatrix)));
    }

    #[test]
    fn supported_flags_on_a_known_front() {
        // (2,3) lies on the segment (1,5)-(3,1): collinear, still supported;
        // (2.5,2.5) lies above it: unsupported
        let front = [[1.0, 5.0], [2.0, 3.0], [2.5, 2.5], [3.0, 1.0], [5.0, 0.5]];
        assert_eq!(supported_flags(&front), vec![true, true, false, true, true]);
        assert_eq!(supported_flags(&[[1.0, 1.0]]), vec![true]);
    }
}
