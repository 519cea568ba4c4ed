//! Reference-vector guided EA building blocks: non-dominated sorting,
//! reference vector handling, angle-penalized-distance selection, simulated
//! binary crossover, and polynomial mutation. All objectives are minimized.

use rand::Rng;

use crate::error::{Error, Result};
use crate::problems::BoundedSpace;

/// One candidate solution; fitness fields are filled as they become known.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub f_true: Option<[f64; 2]>,
    pub f_surrogate: Option<[f64; 2]>,
}

impl Solution {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, f_true: None, f_surrogate: None }
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Solution>,
    pub generation: u32,
}

/// `a` dominates `b`: no worse in both objectives and better in at least one.
pub fn dominates(a: [f64; 2], b: [f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Indices of the non-dominated subset, in input order.
pub fn nondominated_indices(points: &[[f64; 2]]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|&q| dominates(q, points[i])))
        .collect()
}

/// 1-based domination ranks: rank 1 is the non-dominated set, rank r+1 is
/// non-dominated once ranks <= r are removed.
pub fn nondominated_sort(points: &[[f64; 2]]) -> Vec<usize> {
    let m = points.len();
    let mut rank = vec![0usize; m];
    let mut dominated_by = vec![0usize; m];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        for j in (i + 1)..m {
            if dominates(points[i], points[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(points[j], points[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut front: Vec<usize> = (0..m).filter(|&i| dominated_by[i] == 0).collect();
    let mut r = 1;
    while !front.is_empty() {
        let mut next = Vec::new();
        for &i in &front {
            rank[i] = r;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        front = next;
        r += 1;
    }
    rank
}

/// Unit reference vectors with their pairwise minimum angles.
#[derive(Debug, Clone)]
pub struct ReferenceVectorSet {
    pub vectors: Vec<[f64; 2]>,
    /// per-vector smallest angle to any other vector, radians
    pub gamma: Vec<f64>,
    base: Vec<[f64; 2]>,
}

fn normalize2(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

fn angle_between_units(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dot = (a[0] * b[0] + a[1] * b[1]).clamp(-1.0, 1.0);
    dot.acos()
}

fn compute_gamma(vectors: &[[f64; 2]]) -> Vec<f64> {
    let n = vectors.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| angle_between_units(vectors[i], vectors[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

impl ReferenceVectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Uniform simplex-lattice reference vectors for two objectives:
/// {(i/H, 1-i/H)} with H = count-1, each normalized to unit length.
pub fn generate_reference_vectors(count: usize) -> Result<ReferenceVectorSet> {
    if count < 2 {
        return Err(Error::Config(format!("need at least 2 reference vectors, got {count}")));
    }
    let h = (count - 1) as f64;
    let vectors: Vec<[f64; 2]> = (0..count)
        .map(|i| normalize2([i as f64 / h, 1.0 - i as f64 / h]))
        .collect();
    let gamma = compute_gamma(&vectors);
    Ok(ReferenceVectorSet { base: vectors.clone(), vectors, gamma })
}

/// Rescale the base vectors by the objective ranges; degenerate ranges
/// leave the set unchanged.
pub fn adapt_reference_vectors(
    rvs: &ReferenceVectorSet,
    z_min: [f64; 2],
    z_max: [f64; 2],
) -> ReferenceVectorSet {
    let range = [z_max[0] - z_min[0], z_max[1] - z_min[1]];
    if range[0] <= 0.0 || range[1] <= 0.0 {
        return rvs.clone();
    }
    let vectors: Vec<[f64; 2]> = rvs
        .base
        .iter()
        .map(|v| normalize2([v[0] * range[0], v[1] * range[1]]))
        .collect();
    let gamma = compute_gamma(&vectors);
    ReferenceVectorSet { base: rvs.base.clone(), vectors, gamma }
}

/// Selection context: penalty exponent, generation counters, and the
/// current ideal estimate.
#[derive(Debug, Clone, Copy)]
pub struct ApdContext {
    pub alpha: f64,
    pub t: u32,
    pub t_max: u32,
    pub z_min: [f64; 2],
}

impl ApdContext {
    fn progress(&self) -> f64 {
        if self.t_max == 0 {
            1.0
        } else {
            f64::from(self.t) / f64::from(self.t_max)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApdAssignment {
    /// indices selected per reference vector (at most one each)
    pub selected: Vec<usize>,
    /// reference vector index per member
    pub vector_of: Vec<usize>,
    /// APD of each member against its assigned vector
    pub apd: Vec<f64>,
}

/// Assign members to reference vectors by smallest angle and compute every
/// member's angle-penalized distance.
pub fn apd_assign(
    objectives: &[[f64; 2]],
    rvs: &ReferenceVectorSet,
    ctx: &ApdContext,
) -> ApdAssignment {
    let penalty_scale = 2.0 * ctx.progress().powf(ctx.alpha);
    let mut vector_of = vec![0usize; objectives.len()];
    let mut apd = vec![0.0f64; objectives.len()];
    for (i, f) in objectives.iter().enumerate() {
        let fp = [f[0] - ctx.z_min[0], f[1] - ctx.z_min[1]];
        let norm = (fp[0] * fp[0] + fp[1] * fp[1]).sqrt();
        if norm == 0.0 {
            // member sits at the ideal estimate; best possible on vector 0
            vector_of[i] = 0;
            apd[i] = 0.0;
            continue;
        }
        let unit = [fp[0] / norm, fp[1] / norm];
        let mut best = 0usize;
        let mut best_angle = f64::INFINITY;
        for (v, vec) in rvs.vectors.iter().enumerate() {
            let angle = angle_between_units(unit, *vec);
            if angle < best_angle {
                best_angle = angle;
                best = v;
            }
        }
        vector_of[i] = best;
        apd[i] = (1.0 + penalty_scale * best_angle / rvs.gamma[best]) * norm;
    }
    let mut selected = Vec::new();
    for v in 0..rvs.len() {
        let mut best: Option<usize> = None;
        for i in 0..objectives.len() {
            if vector_of[i] != v {
                continue;
            }
            if best.map_or(true, |b| apd[i] < apd[b]) {
                best = Some(i);
            }
        }
        if let Some(i) = best {
            selected.push(i);
        }
    }
    ApdAssignment { selected, vector_of, apd }
}

/// Angle-penalized-distance selection: at most one member per reference
/// vector, the APD minimizer within each subpopulation.
pub fn apd_select(
    objectives: &[[f64; 2]],
    rvs: &ReferenceVectorSet,
    ctx: &ApdContext,
) -> Vec<usize> {
    apd_assign(objectives, rvs, ctx).selected
}

/// APD selection filled up to `target` members with the best-APD leftovers,
/// keeping the population size constant for the variation step.
pub fn select_parents(
    objectives: &[[f64; 2]],
    rvs: &ReferenceVectorSet,
    ctx: &ApdContext,
    target: usize,
) -> Vec<usize> {
    let assignment = apd_assign(objectives, rvs, ctx);
    let mut chosen = assignment.selected.clone();
    chosen.truncate(target);
    if chosen.len() < target {
        let mut taken = vec![false; objectives.len()];
        for &i in &chosen {
            taken[i] = true;
        }
        let mut rest: Vec<usize> = (0..objectives.len()).filter(|&i| !taken[i]).collect();
        rest.sort_by(|&a, &b| {
            assignment.apd[a].partial_cmp(&assignment.apd[b]).unwrap().then(a.cmp(&b))
        });
        for i in rest {
            if chosen.len() == target {
                break;
            }
            chosen.push(i);
        }
    }
    chosen
}

/// Simulated binary crossover with per-variable crossover probability 0.5,
/// clamped to the box.
pub fn sbx_crossover<R: Rng>(
    p1: &[f64],
    p2: &[f64],
    eta_c: f64,
    space: &BoundedSpace,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for q in 0..p1.len() {
        if rng.random::<f64>() >= 0.5 || (p1[q] - p2[q]).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta_c + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta_c + 1.0))
        };
        c1[q] = 0.5 * ((1.0 + beta) * p1[q] + (1.0 - beta) * p2[q]);
        c2[q] = 0.5 * ((1.0 - beta) * p1[q] + (1.0 + beta) * p2[q]);
    }
    space.clamp(&mut c1);
    space.clamp(&mut c2);
    (c1, c2)
}

/// Polynomial mutation with per-variable probability `p_m` and index
/// `eta_m`, clamped to the box.
pub fn polynomial_mutation<R: Rng>(
    x: &[f64],
    eta_m: f64,
    p_m: f64,
    space: &BoundedSpace,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = x.to_vec();
    for q in 0..x.len() {
        if rng.random::<f64>() >= p_m {
            continue;
        }
        let u: f64 = rng.random();
        let lo = space.lower[q];
        let hi = space.upper[q];
        if u < 0.5 {
            let delta = (2.0 * u).powf(1.0 / (eta_m + 1.0)) - 1.0;
            out[q] += delta * (out[q] - lo);
        } else {
            let delta = 1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta_m + 1.0));
            out[q] += delta * (hi - out[q]);
        }
    }
    space.clamp(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng;

    /// O(m^3) oracle: peel non-dominated layers by exhaustive pairwise checks.
    fn brute_force_ranks(points: &[[f64; 2]]) -> Vec<usize> {
        let m = points.len();
        let mut rank = vec![0usize; m];
        let mut remaining: Vec<usize> = (0..m).collect();
        let mut r = 1;
        while !remaining.is_empty() {
            let layer: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining.iter().any(|&j| j != i && dominates(points[j], points[i]))
                })
                .collect();
            for &i in &layer {
                rank[i] = r;
            }
            remaining.retain(|i| !layer.contains(i));
            r += 1;
        }
        rank
    }

    #[test]
    fn sort_simple_cases() {
        assert_eq!(nondominated_sort(&[[1.0, 2.0]]), vec![1]);
        assert_eq!(nondominated_sort(&[[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]), vec![1, 1, 2]);
        let chain: Vec<[f64; 2]> = (0..7).map(|i| [i as f64, i as f64]).collect();
        assert_eq!(nondominated_sort(&chain), (1..=7).collect::<Vec<_>>());
        assert!(nondominated_sort(&[]).is_empty());
    }

    #[test]
    fn sort_matches_brute_force_on_200_random_instances() {
        let mut rng = seeding::stream(31, &["ndsort"]);
        for _ in 0..200 {
            let m = rng.random_range(1..=50);
            let pts: Vec<[f64; 2]> = (0..m)
                .map(|_| [rng.random_range(0.0..4.0_f64).round(), rng.random_range(0.0..4.0_f64).round()])
                .collect();
            assert_eq!(nondominated_sort(&pts), brute_force_ranks(&pts));
        }
    }

    #[test]
    fn rank_one_equals_nondominated_set() {
        let mut rng = seeding::stream(32, &["nd"]);
        let pts: Vec<[f64; 2]> = (0..40).map(|_| [rng.random(), rng.random()]).collect();
        let ranks = nondominated_sort(&pts);
        let rank_one: Vec<usize> = (0..pts.len()).filter(|&i| ranks[i] == 1).collect();
        assert_eq!(rank_one, nondominated_indices(&pts));
    }

    #[test]
    fn reference_vector_lattice() {
        let rvs = generate_reference_vectors(2).unwrap();
        assert_eq!(rvs.vectors, vec![[0.0, 1.0], [1.0, 0.0]]);

        let rvs = generate_reference_vectors(5).unwrap();
        assert_eq!(rvs.len(), 5);
        let mid = rvs.vectors[2];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mid[0] - s).abs() < 1e-12 && (mid[1] - s).abs() < 1e-12);

        assert!(generate_reference_vectors(1).is_err());
    }

    #[test]
    fn gamma_is_the_adjacent_angle_for_32_vectors() {
        let rvs = generate_reference_vectors(32).unwrap();
        assert_eq!(rvs.len(), 32);
        for (i, v) in rvs.vectors.iter().enumerate() {
            let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            // oracle: direct angle computation over all pairs
            let expect = rvs
                .vectors
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, w)| angle_between_units(*v, *w))
                .fold(f64::INFINITY, f64::min)
                ;
            assert_eq!(rvs.gamma[i], expect);
            assert!(rvs.gamma[i] > 0.0);
        }
    }

    #[test]
    fn early_generations_select_by_norm() {
        // alpha huge, t < t_max: penalty vanishes, smallest translated norm wins
        let rvs = generate_reference_vectors(2).unwrap();
        let ctx = ApdContext { alpha: 1e6, t: 10, t_max: 100, z_min: [0.0, 0.0] };
        assert!(ctx.progress().powf(ctx.alpha) < 1e-30);
        let objs = [[2.0, 2.0], [1.0, 1.0], [3.0, 0.1]];
        let sel = apd_select(&objs, &rvs, &ctx);
        assert!(sel.contains(&1));
    }

    #[test]
    fn norm_one_beats_norm_two_at_equal_angle() {
        let rvs = generate_reference_vectors(2).unwrap();
        let ctx = ApdContext { alpha: 2.0, t: 1, t_max: 1, z_min: [0.0, 0.0] };
        // both lie on the (1,0) vector exactly
        let objs = [[1.0, 0.0], [2.0, 0.0]];
        let sel = apd_select(&objs, &rvs, &ctx);
        assert_eq!(sel, vec![0]);
    }

    #[test]
    fn apd_matches_brute_force_enumeration() {
        let mut rng = seeding::stream(77, &["apd"]);
        let rvs = generate_reference_vectors(4).unwrap();
        let ctx = ApdContext { alpha: 2.0, t: 5, t_max: 5, z_min: [0.1, -0.2] };
        let objs: Vec<[f64; 2]> = (0..20)
            .map(|_| [rng.random_range(0.2..4.0), rng.random_range(0.2..4.0)])
            .collect();
        let assignment = apd_assign(&objs, &rvs, &ctx);

        // oracle: recompute assignment and APD for every member directly
        let scale = 2.0 * (1.0f64).powf(2.0);
        for (i, f) in objs.iter().enumerate() {
            let fp = [f[0] - ctx.z_min[0], f[1] - ctx.z_min[1]];
            let norm = (fp[0] * fp[0] + fp[1] * fp[1]).sqrt();
            let unit = [fp[0] / norm, fp[1] / norm];
            let (mut best_v, mut best_a) = (0usize, f64::INFINITY);
            for (v, w) in rvs.vectors.iter().enumerate() {
                let a = angle_between_units(unit, *w);
                if a < best_a {
                    best_a = a;
                    best_v = v;
                }
            }
            assert_eq!(assignment.vector_of[i], best_v);
            let apd = (1.0 + scale * best_a / rvs.gamma[best_v]) * norm;
            assert!((assignment.apd[i] - apd).abs() < 1e-12);
        }
        // every selected member minimizes APD within its subpopulation
        for &s in &assignment.selected {
            let v = assignment.vector_of[s];
            for i in 0..objs.len() {
                if assignment.vector_of[i] == v {
                    assert!(assignment.apd[s] <= assignment.apd[i]);
                }
            }
        }
        assert!(assignment.selected.len() <= rvs.len().min(objs.len()));
    }

    #[test]
    fn adaptation_examples() {
        let rvs = generate_reference_vectors(3).unwrap();
        // isotropic range: unchanged
        let same = adapt_reference_vectors(&rvs, [0.0, 0.0], [2.0, 2.0]);
        for (a, b) in rvs.vectors.iter().zip(&same.vectors) {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
        // hand normalization of the diagonal base vector scaled by (1, 3)
        let adapted = adapt_reference_vectors(&rvs, [0.0, 0.0], [1.0, 3.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = {
            let v = [s * 1.0, s * 3.0];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        };
        assert!((adapted.vectors[1][0] - expect[0]).abs() < 1e-12);
        assert!((adapted.vectors[1][1] - expect[1]).abs() < 1e-12);
        // degenerate range: no-op
        let noop = adapt_reference_vectors(&rvs, [0.0, 5.0], [4.0, 5.0]);
        assert_eq!(noop.vectors, rvs.vectors);
    }

    #[test]
    fn vectors_stay_unit_after_many_adaptations() {
        let mut rvs = generate_reference_vectors(8).unwrap();
        let mut rng = seeding::stream(5, &["adapt"]);
        for _ in 0..50 {
            let zmin = [rng.random_range(-1.0..0.0), rng.random_range(-1.0..0.0)];
            let zmax = [rng.random_range(0.5..4.0), rng.random_range(0.5..4.0)];
            rvs = adapt_reference_vectors(&rvs, zmin, zmax);
        }
        for v in &rvs.vectors {
            assert!(((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sbx_identical_parents_are_a_fixed_point() {
        let space = BoundedSpace::symmetric(4);
        let mut rng = seeding::stream(6, &["sbx"]);
        let p = vec![1.0, -2.0, 3.5, 0.0];
        let (c1, c2) = sbx_crossover(&p, &p, 20.0, &space, &mut rng);
        assert_eq!(c1, p);
        assert_eq!(c2, p);
    }

    #[test]
    fn sbx_preserves_the_parent_mean() {
        let space = BoundedSpace::symmetric(3);
        let mut rng = seeding::stream(7, &["sbx2"]);
        let p1 = vec![10.0, -5.0, 2.0];
        let p2 = vec![-10.0, 15.0, 4.0];
        for _ in 0..200 {
            let (c1, c2) = sbx_crossover(&p1, &p2, 15.0, &space, &mut rng);
            for q in 0..3 {
                let parent_mean = 0.5 * (p1[q] + p2[q]);
                let child_mean = 0.5 * (c1[q] + c2[q]);
                assert!((parent_mean - child_mean).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sbx_spread_grows_as_eta_shrinks() {
        let space = BoundedSpace::symmetric(1);
        let p1 = vec![-1.0];
        let p2 = vec![1.0];
        let spread = |eta: f64, label: &str| {
            let mut rng = seeding::stream(8, &["spread", label]);
            let mut acc = 0.0;
            for _ in 0..10_000 {
                let (c1, c2) = sbx_crossover(&p1, &p2, eta, &space, &mut rng);
                acc += (c1[0] - 0.0).abs() - 1.0 + (c2[0] - 0.0).abs() - 1.0;
            }
            acc
        };
        // abs deviation beyond the parent span: larger for eta 2 than eta 20
        assert!(spread(2.0, "low") > spread(20.0, "high"));
    }

    #[test]
    fn mutation_respects_probability_and_box() {
        let space = BoundedSpace::symmetric(10);
        let x = vec![5.0; 10];
        let mut rng = seeding::stream(9, &["pm"]);

        let same = polynomial_mutation(&x, 20.0, 0.0, &space, &mut rng);
        assert_eq!(same, x);

        let p = 0.1;
        let trials = 10_000;
        let mut changed = 0usize;
        for _ in 0..trials {
            let y = polynomial_mutation(&x, 20.0, p, &space, &mut rng);
            assert!(space.contains(&y));
            changed += y.iter().zip(&x).filter(|(a, b)| a != b).count();
        }
        let n = (trials * 10) as f64;
        let expect = n * p;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((changed as f64 - expect).abs() < 5.0 * sigma, "changed {changed}");
    }

    #[test]
    fn generation_step_is_reproducible() {
        let space = BoundedSpace::symmetric(3);
        let run = |seed: u64| {
            let mut rng = seeding::stream(seed, &["gen"]);
            let p1 = vec![1.0, 2.0, 3.0];
            let p2 = vec![-1.0, 0.0, 4.0];
            let (c1, c2) = sbx_crossover(&p1, &p2, 20.0, &space, &mut rng);
            let m1 = polynomial_mutation(&c1, 20.0, 0.3, &space, &mut rng);
            let m2 = polynomial_mutation(&c2, 20.0, 0.3, &space, &mut rng);
            (m1, m2)
        };
        assert_eq!(run(1234), run(1234));
    }
}
