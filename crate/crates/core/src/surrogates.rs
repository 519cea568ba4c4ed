//! Archive-backed fitness models: inverse distance weighting (plain and
//! regression-corrected), k-nearest-neighbour linear regression, nearest
//! neighbour lookup, and a no-structure baseline.
//!
//! All models interpolate the archive: a query at an archived decision
//! vector returns its true objectives exactly (the baseline excepted).

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moea;
use crate::seeding;

/// Componentwise tolerance under which two decision vectors count as
/// duplicates.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

/// Relative threshold under which the regression-corrected denominator is
/// treated as singular; provably zero for equidistant configurations.
const IDWR_SINGULAR_REL: f64 = 1e-12;

/// Ridge damping on the neighbourhood normal equations.
const LR_KNN_RIDGE: f64 = 1e-8;

pub fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DEDUP_TOLERANCE)
}

#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub x: Vec<f64>,
    pub y: [f64; 2],
}

/// Ordered set of truly evaluated solutions backing surrogate construction.
/// Insertion order is preserved; near-duplicate decision vectors are
/// rejected.
#[derive(Debug, Clone, Default)]
pub struct Archive {
    entries: Vec<ArchiveEntry>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append unless a duplicate (within tolerance) is already present.
    /// Returns whether the entry was added.
    pub fn push(&mut self, x: Vec<f64>, y: [f64; 2]) -> bool {
        debug_assert!(y[0].is_finite() && y[1].is_finite());
        if self.contains(&x) {
            return false;
        }
        self.entries.push(ArchiveEntry { x, y });
        true
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.entries.iter().any(|e| same_point(&e.x, x))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    /// The archive stores every truly evaluated solution; the non-dominated
    /// subset is reported separately.
    pub fn nondominated_indices(&self) -> Vec<usize> {
        let values: Vec<[f64; 2]> = self.entries.iter().map(|e| e.y).collect();
        moea::nondominated_indices(&values)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Inverse distance weighting: convex combination of archived objectives
/// with weights proportional to 1/d. A zero-distance query returns the
/// archived objectives of the first matching entry.
pub fn predict_idw(archive: &Archive, x: &[f64]) -> Result<[f64; 2]> {
    if archive.is_empty() {
        return Err(Error::ModelUnbuilt);
    }
    let mut weight_sum = 0.0;
    let mut acc = [0.0f64; 2];
    for entry in archive.entries() {
        let d = euclid(&entry.x, x);
        if d == 0.0 {
            return Ok(entry.y);
        }
        let w = 1.0 / d;
        weight_sum += w;
        acc[0] += w * entry.y[0];
        acc[1] += w * entry.y[1];
    }
    Ok([acc[0] / weight_sum, acc[1] / weight_sum])
}

/// Inverse distance weighting regression: the plain IDW value plus a trend
/// correction. Falls back to IDW when the denominator is singular or the
/// query coincides with an archive point.
pub fn predict_idwr(archive: &Archive, x: &[f64]) -> Result<[f64; 2]> {
    let n = archive.len();
    if n == 0 {
        return Err(Error::ModelUnbuilt);
    }
    if n < 2 {
        return Err(Error::ArchiveTooSmall { needed: 2, found: n });
    }
    let mut dist_sum = 0.0;
    let mut inv_sum = 0.0;
    let mut y_sum = [0.0f64; 2];
    for entry in archive.entries() {
        let d = euclid(&entry.x, x);
        if d == 0.0 {
            return predict_idw(archive, x);
        }
        dist_sum += d;
        inv_sum += 1.0 / d;
        y_sum[0] += entry.y[0];
        y_sum[1] += entry.y[1];
    }
    let nf = n as f64;
    let denom = nf * nf - dist_sum * inv_sum;
    if denom.abs() < IDWR_SINGULAR_REL * nf * nf {
        return predict_idw(archive, x);
    }
    let idw = predict_idw(archive, x)?;
    let mut out = [0.0f64; 2];
    for o in 0..2 {
        out[o] = idw[o] + nf * (y_sum[o] - nf * idw[o]) / denom;
    }
    Ok(out)
}

/// Solve a symmetric linear system by Gaussian elimination with partial
/// pivoting; `a` is consumed.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Linear regression on the k nearest archive entries, fitted per objective
/// with ridge damping on the centered normal equations (the intercept is
/// not penalized, so a single-point neighbourhood yields a constant model).
/// Neighbour ties break by insertion order; a zero-distance query returns
/// the archived objectives.
pub fn predict_lr_knn(archive: &Archive, x: &[f64], k: usize) -> Result<[f64; 2]> {
    let n = archive.len();
    if n == 0 {
        return Err(Error::ModelUnbuilt);
    }
    let mut order: Vec<(f64, usize)> = archive
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| (euclid(&e.x, x), i))
        .collect();
    if let Some(&(d, i)) = order.iter().min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))) {
        if d == 0.0 {
            return Ok(archive.entries()[i].y);
        }
    }
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let k_eff = k.max(1).min(n);
    let neighbours: Vec<&ArchiveEntry> = order[..k_eff].iter().map(|&(_, i)| &archive.entries()[i]).collect();

    let dim = x.len();
    let mut x_mean = vec![0.0f64; dim];
    for e in &neighbours {
        for q in 0..dim {
            x_mean[q] += e.x[q];
        }
    }
    for v in &mut x_mean {
        *v /= k_eff as f64;
    }

    let mut out = [0.0f64; 2];
    for o in 0..2 {
        let y_mean: f64 = neighbours.iter().map(|e| e.y[o]).sum::<f64>() / k_eff as f64;
        // centered normal equations with ridge on the slopes
        let mut gram = vec![vec![0.0f64; dim]; dim];
        let mut rhs = vec![0.0f64; dim];
        for e in &neighbours {
            let xc: Vec<f64> = e.x.iter().zip(&x_mean).map(|(a, m)| a - m).collect();
            let yc = e.y[o] - y_mean;
            for q in 0..dim {
                rhs[q] += xc[q] * yc;
                for r in 0..dim {
                    gram[q][r] += xc[q] * xc[r];
                }
            }
        }
        for q in 0..dim {
            gram[q][q] += LR_KNN_RIDGE;
        }
        let beta = solve_linear(gram, rhs).ok_or_else(|| {
            Error::UndefinedMetric("singular neighbourhood despite ridge damping".into())
        })?;
        let mut pred = y_mean;
        for q in 0..dim {
            pred += beta[q] * (x[q] - x_mean[q]);
        }
        out[o] = pred;
    }
    Ok(out)
}

/// Objectives of the nearest archive entry (ties by insertion order).
pub fn predict_knn(archive: &Archive, x: &[f64]) -> Result<[f64; 2]> {
    if archive.is_empty() {
        return Err(Error::ModelUnbuilt);
    }
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, e) in archive.entries().iter().enumerate() {
        let d = euclid(&e.x, x);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(archive.entries()[best].y)
}

/// A uniformly random archive entry's full objective pair.
pub fn predict_no_structure<R: Rng>(archive: &Archive, rng: &mut R) -> Result<[f64; 2]> {
    if archive.is_empty() {
        return Err(Error::ModelUnbuilt);
    }
    let i = rng.random_range(0..archive.len());
    Ok(archive.entries()[i].y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    Idw,
    Idwr,
    LrKnn,
    Knn,
    NoStructure,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 5] = [
        SurrogateKind::Knn,
        SurrogateKind::Idw,
        SurrogateKind::Idwr,
        SurrogateKind::LrKnn,
        SurrogateKind::NoStructure,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SurrogateKind::Idw => "idw",
            SurrogateKind::Idwr => "idwr",
            SurrogateKind::LrKnn => "lr_knn",
            SurrogateKind::Knn => "knn",
            SurrogateKind::NoStructure => "no_structure",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::Config(format!("unknown surrogate kind `{id}`")))
    }
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// An immutable snapshot of one model over one archive version. Only the
/// no-structure baseline consumes randomness, through its own stream.
pub struct SurrogateModel<'a> {
    pub kind: SurrogateKind,
    archive: &'a Archive,
    k: usize,
    rng: Option<ChaCha8Rng>,
}

impl<'a> SurrogateModel<'a> {
    pub fn build(kind: SurrogateKind, archive: &'a Archive, k: usize, seed: u64) -> Result<Self> {
        if archive.is_empty() {
            return Err(Error::ModelUnbuilt);
        }
        if kind == SurrogateKind::Idwr && archive.len() < 2 {
            return Err(Error::ArchiveTooSmall { needed: 2, found: archive.len() });
        }
        let rng = (kind == SurrogateKind::NoStructure)
            .then(|| seeding::stream(seed, &["no_structure"]));
        Ok(Self { kind, archive, k, rng })
    }

    pub fn predict(&mut self, x: &[f64]) -> [f64; 2] {
        match self.kind {
            SurrogateKind::Idw => predict_idw(self.archive, x),
            SurrogateKind::Idwr => predict_idwr(self.archive, x),
            SurrogateKind::LrKnn => predict_lr_knn(self.archive, x, self.k),
            SurrogateKind::Knn => predict_knn(self.archive, x),
            SurrogateKind::NoStructure => {
                predict_no_structure(self.archive, self.rng.as_mut().expect("baseline rng"))
            }
        }
        .expect("archive checked non-empty at build time")
    }

    pub fn archive(&self) -> &Archive {
        self.archive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng;

    fn archive_1d(pairs: &[(f64, f64)]) -> Archive {
        let mut a = Archive::new();
        for &(x, y) in pairs {
            a.push(vec![x], [y, -y]);
        }
        a
    }

    #[test]
    fn idw_hand_computed_values() {
        let a = archive_1d(&[(0.0, 0.0), (1.0, 10.0)]);
        // equal distances: symmetric weights
        assert_eq!(predict_idw(&a, &[0.5]).unwrap()[0], 5.0);
        // weights (0.75, 0.25) from the hand evaluation
        let y = predict_idw(&a, &[0.25]).unwrap();
        assert!((y[0] - 2.5).abs() < 1e-12, "{}", y[0]);
        // zero-distance rule
        assert_eq!(predict_idw(&a, &[1.0]).unwrap(), [10.0, -10.0]);
        assert!(matches!(predict_idw(&Archive::new(), &[0.0]), Err(Error::ModelUnbuilt)));
    }

    #[test]
    fn idwr_follows_the_trend_line() {
        let a = archive_1d(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        let y = predict_idwr(&a, &[3.0]).unwrap();
        assert!((y[0] - 3.0).abs() < 1e-9, "{}", y[0]);
        assert!((y[1] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn idwr_degenerate_cases_fall_back_to_idw() {
        // equidistant two-point archive: denominator n^2 - sum(d)*sum(1/d) = 0
        let a = archive_1d(&[(0.0, 0.0), (1.0, 10.0)]);
        assert_eq!(predict_idwr(&a, &[0.5]).unwrap()[0], 5.0);
        // archived query point
        assert_eq!(predict_idwr(&a, &[1.0]).unwrap(), [10.0, -10.0]);
        // too small
        let single = archive_1d(&[(0.0, 1.0)]);
        assert!(matches!(
            predict_idwr(&single, &[0.5]),
            Err(Error::ArchiveTooSmall { needed: 2, found: 1 })
        ));
    }

    #[test]
    fn idwr_reduces_to_idw_when_correction_numerator_vanishes() {
        // archive symmetric around the query: sum(y) = n * idw
        let mut a = Archive::new();
        a.push(vec![-1.0, 0.0], [2.0, 0.0]);
        a.push(vec![1.0, 0.0], [2.0, 0.0]);
        a.push(vec![0.0, 2.0], [2.0, 0.0]);
        let idw = predict_idw(&a, &[0.0, 0.5]).unwrap();
        let idwr = predict_idwr(&a, &[0.0, 0.5]).unwrap();
        assert!((idw[0] - idwr[0]).abs() < 1e-12);
    }

    #[test]
    fn lr_knn_recovers_a_linear_function() {
        // y = 3 + 2 x1 - x2
        let f = |x: &[f64]| 3.0 + 2.0 * x[0] - x[1];
        let mut a = Archive::new();
        for &(u, v) in &[(0.0, 0.0), (1.0, 0.3), (0.2, 1.0), (0.8, 0.9), (0.5, 0.1)] {
            a.push(vec![u, v], [f(&[u, v]), 0.0]);
        }
        for &(u, v) in &[(0.4, 0.4), (2.0, -1.0), (10.0, 3.0)] {
            let y = predict_lr_knn(&a, &[u, v], 5).unwrap();
            assert!((y[0] - f(&[u, v])).abs() < 1e-6, "at ({u},{v}): {}", y[0]);
        }
    }

    #[test]
    fn lr_knn_k1_is_the_nearest_neighbour_constant() {
        let a = archive_1d(&[(0.0, 3.0), (10.0, 7.0)]);
        let y = predict_lr_knn(&a, &[2.0], 1).unwrap();
        assert!((y[0] - 3.0).abs() < 1e-9);
        let y = predict_lr_knn(&a, &[9.0], 1).unwrap();
        assert!((y[0] - 7.0).abs() < 1e-9);
    }

    /// Independent dense least-squares oracle: assemble the full (D+1)
    /// normal equations with ridge on the slope block and solve by
    /// elimination without pivoting tricks.
    fn oracle_lr(xs: &[Vec<f64>], ys: &[f64], ridge: f64, query: &[f64]) -> f64 {
        let n = xs.len();
        let d = xs[0].len();
        let mut a = vec![vec![0.0f64; d + 1]; d + 1];
        let mut b = vec![0.0f64; d + 1];
        for i in 0..n {
            let row: Vec<f64> = std::iter::once(1.0).chain(xs[i].iter().copied()).collect();
            for p in 0..=d {
                b[p] += row[p] * ys[i];
                for q in 0..=d {
                    a[p][q] += row[p] * row[q];
                }
            }
        }
        for p in 1..=d {
            a[p][p] += ridge;
        }
        // plain Gauss-Jordan
        for col in 0..=d {
            let piv = a[col][col];
            for q in 0..=d {
                a[col][q] /= piv;
            }
            b[col] /= piv;
            for row in 0..=d {
                if row != col {
                    let f = a[row][col];
                    for q in 0..=d {
                        a[row][q] -= f * a[col][q];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        b[0] + (0..d).map(|q| b[q + 1] * query[q]).sum::<f64>()
    }

    #[test]
    fn lr_knn_matches_a_dense_normal_equations_solve() {
        let mut rng = seeding::stream(13, &["lr"]);
        let mut a = Archive::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..5 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: f64 = rng.random_range(-5.0..5.0);
            xs.push(x.clone());
            ys.push(y);
            a.push(x, [y, 0.0]);
        }
        let query = vec![0.3, -0.4, 1.1];
        let got = predict_lr_knn(&a, &query, 5).unwrap()[0];
        let want = oracle_lr(&xs, &ys, 1e-8, &query);
        let rel = (got - want).abs() / want.abs().max(1.0);
        assert!(rel < 1e-6, "got {got}, want {want}");
    }

    #[test]
    fn knn_examples() {
        let mut a = Archive::new();
        a.push(vec![0.0], [0.0, 1.0]);
        a.push(vec![10.0], [5.0, 5.0]);
        assert_eq!(predict_knn(&a, &[2.0]).unwrap(), [0.0, 1.0]);
        assert_eq!(predict_knn(&a, &[10.0]).unwrap(), [5.0, 5.0]);
        // always an archived objective row
        let y = predict_knn(&a, &[7.0]).unwrap();
        assert!(a.entries().iter().any(|e| e.y == y));
    }

    #[test]
    fn no_structure_draws_rows_uniformly() {
        let mut a = Archive::new();
        for i in 0..4 {
            a.push(vec![i as f64], [i as f64, -(i as f64)]);
        }
        let mut rng = seeding::stream(14, &["ns"]);
        let n = 10_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let y = predict_no_structure(&a, &mut rng).unwrap();
            let idx = a.entries().iter().position(|e| e.y == y).unwrap();
            counts[idx] += 1;
        }
        let p = 0.25f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma, "{counts:?}");
        }
        // single-entry archive always returns that pair
        let single = archive_1d(&[(0.0, 2.0)]);
        assert_eq!(predict_no_structure(&single, &mut rng).unwrap(), [2.0, -2.0]);
    }

    #[test]
    fn idw_stays_within_the_archived_range() {
        let mut rng = seeding::stream(15, &["bounds"]);
        for _ in 0..50 {
            let mut a = Archive::new();
            let n = rng.random_range(1..8);
            for _ in 0..n {
                let x: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
                a.push(x, [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
            }
            let q: Vec<f64> = (0..2).map(|_| rng.random_range(-4.0..4.0)).collect();
            let y = predict_idw(&a, &q).unwrap();
            for o in 0..2 {
                let lo = a.entries().iter().map(|e| e.y[o]).fold(f64::INFINITY, f64::min);
                let hi = a.entries().iter().map(|e| e.y[o]).fold(f64::NEG_INFINITY, f64::max);
                assert!(y[o] >= lo - 1e-12 && y[o] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn all_interpolating_models_reproduce_archived_points() {
        let mut rng = seeding::stream(16, &["interp"]);
        let mut a = Archive::new();
        for _ in 0..6 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            a.push(x, [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]);
        }
        for e in a.entries() {
            assert_eq!(predict_idw(&a, &e.x).unwrap(), e.y);
            assert_eq!(predict_idwr(&a, &e.x).unwrap(), e.y);
            assert_eq!(predict_lr_knn(&a, &e.x, 4).unwrap(), e.y);
            assert_eq!(predict_knn(&a, &e.x).unwrap(), e.y);
        }
    }

    #[test]
    fn archive_rejects_near_duplicates() {
        let mut a = Archive::new();
        assert!(a.push(vec![1.0, 2.0], [0.0, 0.0]));
        assert!(!a.push(vec![1.0, 2.0 + 0.5 * DEDUP_TOLERANCE], [1.0, 1.0]));
        assert_eq!(a.len(), 1);
        assert!(a.push(vec![1.0, 2.1], [1.0, 1.0]));
    }

    #[test]
    fn model_predictions_are_deterministic() {
        let mut a = Archive::new();
        let mut rng = seeding::stream(17, &["det"]);
        for _ in 0..10 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            a.push(x, [rng.random(), rng.random()]);
        }
        let q = vec![0.2, 0.2];
        for kind in SurrogateKind::ALL {
            let mut m1 = SurrogateModel::build(kind, &a, 4, 99).unwrap();
            let mut m2 = SurrogateModel::build(kind, &a, 4, 99).unwrap();
            assert_eq!(m1.predict(&q), m2.predict(&q), "{kind}");
        }
    }
}
