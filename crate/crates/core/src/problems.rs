//! Bi-objective benchmark problems.
//!
//! Problems are pairwise combinations of shifted single-objective base
//! functions on a common box. Each base attains 0 at its shift, so every
//! problem has a known point where one objective vanishes. Ideal and Nadir
//! anchor points are estimated from a Latin hypercube sample and cached in
//! a [`ProblemManifest`].

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moea;
use crate::seeding;

/// Box-constrained decision space.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedSpace {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundedSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Config("bounds must be non-empty and equal-length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Config("lower bound must be below upper bound in every dimension".into()));
        }
        Ok(Self { dim: lower.len(), lower, upper })
    }

    /// The default box: [-100, 100] in every dimension.
    pub fn symmetric(dim: usize) -> Self {
        Self {
            dim,
            lower: vec![-100.0; dim],
            upper: vec![100.0; dim],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }
}

/// Single-objective base functions; all attain 0 at the origin of their
/// shifted coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    Sphere,
    Ellipsoid,
    Rastrigin,
    Rosenbrock,
    Discus,
    BentCigar,
    SharpRidge,
    DiffPowers,
    Griewank,
    Ackley,
}

impl BaseKind {
    pub const ALL: [BaseKind; 10] = [
        BaseKind::Sphere,
        BaseKind::Ellipsoid,
        BaseKind::Rastrigin,
        BaseKind::Rosenbrock,
        BaseKind::Discus,
        BaseKind::BentCigar,
        BaseKind::SharpRidge,
        BaseKind::DiffPowers,
        BaseKind::Griewank,
        BaseKind::Ackley,
    ];

    /// The default suite bases.
    pub const DEFAULT: [BaseKind; 4] = [
        BaseKind::Sphere,
        BaseKind::Ellipsoid,
        BaseKind::Rastrigin,
        BaseKind::Rosenbrock,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BaseKind::Sphere => "sphere",
            BaseKind::Ellipsoid => "ellipsoid",
            BaseKind::Rastrigin => "rastrigin",
            BaseKind::Rosenbrock => "rosenbrock",
            BaseKind::Discus => "discus",
            BaseKind::BentCigar => "bent_cigar",
            BaseKind::SharpRidge => "sharp_ridge",
            BaseKind::DiffPowers => "diff_powers",
            BaseKind::Griewank => "griewank",
            BaseKind::Ackley => "ackley",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::UnknownBase(id.to_string()))
    }

    /// Evaluate at shifted coordinates `z = x - shift`.
    fn eval(self, z: &[f64]) -> f64 {
        let d = z.len();
        match self {
            BaseKind::Sphere => z.iter().map(|v| v * v).sum(),
            BaseKind::Ellipsoid => {
                if d == 1 {
                    return z[0] * z[0];
                }
                z.iter()
                    .enumerate()
                    .map(|(i, v)| 1e6f64.powf(i as f64 / (d - 1) as f64) * v * v)
                    .sum()
            }
            BaseKind::Rastrigin => {
                let cos: f64 = z.iter().map(|v| (2.0 * std::f64::consts::PI * v).cos()).sum();
                let sq: f64 = z.iter().map(|v| v * v).sum();
                10.0 * (d as f64 - cos) + sq
            }
            BaseKind::Rosenbrock => {
                if d == 1 {
                    return z[0] * z[0];
                }
                (0..d - 1)
                    .map(|i| {
                        let a = z[i + 1] - z[i] * z[i];
                        100.0 * a * a + z[i] * z[i]
                    })
                    .sum()
            }
            BaseKind::Discus => {
                1e6 * z[0] * z[0] + z.iter().skip(1).map(|v| v * v).sum::<f64>()
            }
            BaseKind::BentCigar => {
                z[0] * z[0] + 1e6 * z.iter().skip(1).map(|v| v * v).sum::<f64>()
            }
            BaseKind::SharpRidge => {
                let tail: f64 = z.iter().skip(1).map(|v| v * v).sum();
                z[0] * z[0] + 100.0 * tail.sqrt()
            }
            BaseKind::DiffPowers => {
                if d == 1 {
                    return z[0].abs().powi(2);
                }
                z.iter()
                    .enumerate()
                    .map(|(i, v)| v.abs().powf(2.0 + 4.0 * i as f64 / (d - 1) as f64))
                    .sum()
            }
            BaseKind::Griewank => {
                let sq: f64 = z.iter().map(|v| v * v).sum();
                let prod: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                sq / 4000.0 - prod + 1.0
            }
            BaseKind::Ackley => {
                let sq: f64 = z.iter().map(|v| v * v).sum::<f64>() / d as f64;
                let cos: f64 =
                    z.iter().map(|v| (2.0 * std::f64::consts::PI * v).cos()).sum::<f64>() / d as f64;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cos.exp() + 20.0 + std::f64::consts::E
            }
        }
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A base function translated so its optimum sits at `shift`.
#[derive(Debug, Clone)]
pub struct ShiftedBase {
    pub kind: BaseKind,
    pub shift: Vec<f64>,
}

impl ShiftedBase {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(&self.shift).map(|(a, s)| a - s).collect();
        self.kind.eval(&z)
    }
}

/// One scalar objective; suite problems use shifted bases, tests may plug
/// in arbitrary functions.
#[derive(Clone)]
pub enum Objective {
    Shifted(ShiftedBase),
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Objective {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Shifted(b) => b.eval(x),
            Objective::Custom(f) => f(x),
        }
    }

    fn shift_point(&self) -> Option<&[f64]> {
        match self {
            Objective::Shifted(b) => Some(&b.shift),
            Objective::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Shifted(b) => write!(f, "Shifted({}, ..)", b.kind),
            Objective::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Estimated normalization anchors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub ideal: [f64; 2],
    pub nadir: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct BiObjectiveProblem {
    pub id: String,
    pub space: BoundedSpace,
    pub objective_a: Objective,
    pub objective_b: Objective,
    pub anchors: Option<Anchors>,
}

impl BiObjectiveProblem {
    pub fn new(id: impl Into<String>, space: BoundedSpace, a: Objective, b: Objective) -> Self {
        Self { id: id.into(), space, objective_a: a, objective_b: b, anchors: None }
    }

    pub fn evaluate(&self, x: &[f64]) -> [f64; 2] {
        [self.objective_a.eval(x), self.objective_b.eval(x)]
    }

    pub fn set_anchors(&mut self, anchors: Anchors) -> Result<()> {
        if anchors.ideal[0] > anchors.nadir[0] || anchors.ideal[1] > anchors.nadir[1] {
            return Err(Error::DegenerateAnchors);
        }
        self.anchors = Some(anchors);
        Ok(())
    }

    /// Known optima of the shifted objectives, used when estimating anchors.
    pub fn shift_points(&self) -> Vec<Vec<f64>> {
        [&self.objective_a, &self.objective_b]
            .iter()
            .filter_map(|o| o.shift_point().map(|s| s.to_vec()))
            .collect()
    }
}

/// Cached anchor estimation result; re-running with the same seed
/// reproduces it bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemManifest {
    pub problem_id: String,
    pub ideal: [f64; 2],
    pub nadir: [f64; 2],
    pub n: usize,
    pub seed: u64,
}

impl ProblemManifest {
    pub fn anchors(&self) -> Anchors {
        Anchors { ideal: self.ideal, nadir: self.nadir }
    }
}

fn shift_for(kind: BaseKind, dim: usize, suite_seed: u64, slot: u32) -> Vec<f64> {
    let mut rng = seeding::stream(suite_seed, &["shift", kind.id(), &slot.to_string()]);
    (0..dim).map(|_| rng.random_range(-80.0..80.0)).collect()
}

/// Build every unordered pair of distinct bases as one problem; with
/// `same_base_pairs`, also pair each base with a second shift of itself.
/// Ids are stable and the returned list is sorted by id.
pub fn build_suite(
    base_ids: &[String],
    dim: usize,
    same_base_pairs: bool,
    suite_seed: u64,
) -> Result<Vec<BiObjectiveProblem>> {
    if base_ids.len() < 2 {
        return Err(Error::Config("suite needs at least two base function ids".into()));
    }
    if dim == 0 {
        return Err(Error::Config("suite dimension must be positive".into()));
    }
    let mut kinds = base_ids.iter().map(|s| BaseKind::from_id(s)).collect::<Result<Vec<_>>>()?;
    kinds.sort_by_key(|k| k.id());
    kinds.dedup();
    if kinds.len() != base_ids.len() {
        return Err(Error::Config("duplicate base function ids in suite".into()));
    }

    let space = BoundedSpace::symmetric(dim);
    let shifted = |kind: BaseKind, slot: u32| {
        Objective::Shifted(ShiftedBase { kind, shift: shift_for(kind, dim, suite_seed, slot) })
    };

    let mut problems = Vec::new();
    for (i, &a) in kinds.iter().enumerate() {
        for &b in &kinds[i + 1..] {
            problems.push(BiObjectiveProblem::new(
                format!("{}__{}", a.id(), b.id()),
                space.clone(),
                shifted(a, 0),
                shifted(b, 0),
            ));
        }
        if same_base_pairs {
            problems.push(BiObjectiveProblem::new(
                format!("{}__{}", a.id(), a.id()),
                space.clone(),
                shifted(a, 0),
                shifted(a, 1),
            ));
        }
    }
    problems.sort_by(|p, q| p.id.cmp(&q.id));
    Ok(problems)
}

/// Latin hypercube sample: `n` points, exactly one per axis-aligned bin of
/// width (upper-lower)/n in every dimension. Deterministic per seed.
pub fn latin_hypercube(space: &BoundedSpace, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = seeding::stream(seed, &["lhs"]);
    let mut points = vec![vec![0.0; space.dim]; n];
    for q in 0..space.dim {
        let width = (space.upper[q] - space.lower[q]) / n as f64;
        let mut bins: Vec<usize> = (0..n).collect();
        bins.shuffle(&mut rng);
        for (i, point) in points.iter_mut().enumerate() {
            let u: f64 = rng.random();
            point[q] = space.lower[q] + (bins[i] as f64 + u) * width;
        }
    }
    Ok(points)
}

/// Componentwise minimum over all values and maximum over the
/// non-dominated subset.
pub fn anchor_bounds(values: &[[f64; 2]]) -> (Anchors, [f64; 2]) {
    let mut ideal = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for v in values {
        for o in 0..2 {
            ideal[o] = ideal[o].min(v[o]);
            max[o] = max[o].max(v[o]);
        }
    }
    let mut nadir = [f64::NEG_INFINITY; 2];
    for idx in moea::nondominated_indices(values) {
        for o in 0..2 {
            nadir[o] = nadir[o].max(values[idx][o]);
        }
    }
    (Anchors { ideal, nadir }, max)
}

/// Estimate ideal/Nadir from an `n`-point Latin hypercube unioned with the
/// problem's known shift points.
pub fn estimate_anchors(problem: &BiObjectiveProblem, n: usize, seed: u64) -> Result<ProblemManifest> {
    if n < 100 {
        return Err(Error::Config(format!("anchor estimation needs n >= 100, got {n}")));
    }
    let mut points = latin_hypercube(&problem.space, n, seed)?;
    points.extend(problem.shift_points());
    let values: Vec<[f64; 2]> = points.iter().map(|x| problem.evaluate(x)).collect();

    for o in 0..2 {
        let first = values[0][o];
        if values.iter().all(|v| v[o] == first) {
            return Err(Error::FlatObjective { problem: problem.id.clone(), objective: o });
        }
    }
    let (anchors, _) = anchor_bounds(&values);
    Ok(ProblemManifest {
        problem_id: problem.id.clone(),
        ideal: anchors.ideal,
        nadir: anchors.nadir,
        n,
        seed,
    })
}
