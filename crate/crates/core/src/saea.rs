//! The surrogate-assisted optimisation loop and the temporal landscape
//! sampling around its population.
//!
//! One run alternates an inner reference-vector-guided EA over the current
//! surrogate with outer true evaluations of selected candidates. At
//! configured true-evaluation checkpoints, the vicinity of the population
//! is sampled with the same operators and evaluated under both fitness
//! kinds; those snapshots are instrumentation and never feed back into the
//! optimisation state.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics;
use crate::moea::{
    self, adapt_reference_vectors, generate_reference_vectors, nondominated_sort, ApdContext,
    Population, ReferenceVectorSet, Solution,
};
use crate::problems::{latin_hypercube, BiObjectiveProblem};
use crate::seeding;
use crate::surrogates::{same_point, Archive, SurrogateKind, SurrogateModel};

#[derive(Debug, Clone)]
pub struct SaeaConfig {
    pub n_init: usize,
    pub fe_max_true: usize,
    /// surrogate evaluations per optimisation cycle
    pub fe_max_surrogate: usize,
    /// candidates truly evaluated per cycle
    pub mu: usize,
    pub pop_size: usize,
    /// true-evaluation counts at which the vicinity is sampled
    pub checkpoints: Vec<usize>,
    /// surrogate evaluations per vicinity sample
    pub sample_budget: usize,
    pub seed: u64,
    /// repeat index, carried into snapshots for bookkeeping
    pub repeat: u32,
    pub lr_knn_k: usize,
    pub eta_c: f64,
    pub eta_m: f64,
    /// per-variable mutation probability; None derives 1/dim
    pub p_m: Option<f64>,
    pub alpha: f64,
    /// carry the penalty schedule t/t_max across cycles instead of
    /// resetting it per cycle
    pub global_t: bool,
}

impl Default for SaeaConfig {
    fn default() -> Self {
        Self {
            n_init: 32,
            fe_max_true: 8192,
            fe_max_surrogate: 2000,
            mu: 1,
            pop_size: 32,
            checkpoints: vec![256, 1280, 1792, 8192],
            sample_budget: 2000,
            seed: 0,
            repeat: 0,
            lr_knn_k: 32,
            eta_c: 20.0,
            eta_m: 20.0,
            p_m: None,
            alpha: 1e6,
            global_t: false,
        }
    }
}

impl SaeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu < 1 {
            return Err(Error::Config("mu must be at least 1".into()));
        }
        if self.n_init < 2 {
            return Err(Error::Config("initial sample must hold at least 2 solutions".into()));
        }
        if self.n_init > self.fe_max_true {
            return Err(Error::Config("n_init exceeds the true evaluation budget".into()));
        }
        if self.pop_size < 2 {
            return Err(Error::Config("population size must be at least 2".into()));
        }
        if self.fe_max_surrogate == 0 {
            return Err(Error::Config("surrogate budget must be positive".into()));
        }
        if self.sample_budget == 0 {
            return Err(Error::Config("vicinity sample budget must be positive".into()));
        }
        let mut prev = 0usize;
        for &cp in &self.checkpoints {
            if cp <= prev {
                return Err(Error::Config("checkpoints must be strictly ascending".into()));
            }
            if cp < self.n_init || cp > self.fe_max_true {
                return Err(Error::Config(format!(
                    "checkpoint {cp} outside [n_init, fe_max_true] = [{}, {}]",
                    self.n_init, self.fe_max_true
                )));
            }
            prev = cp;
        }
        Ok(())
    }

    fn mutation_probability(&self, dim: usize) -> f64 {
        self.p_m.unwrap_or(1.0 / dim as f64)
    }
}

/// One sampled row: decision vector, true fitness, and (for temporal
/// snapshots) the surrogate fitness under the checkpoint's model.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub x: Vec<f64>,
    pub f_true: [f64; 2],
    pub f_surrogate: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSnapshot {
    /// true-evaluation count at the checkpoint; 0 for static samples
    pub checkpoint_fe: usize,
    pub rows: Vec<SnapshotRow>,
    /// None for static samples
    pub surrogate: Option<SurrogateKind>,
    pub problem_id: String,
    pub repeat: u32,
}

impl SampleSnapshot {
    /// Extract the decision vectors and the requested fitness columns.
    pub fn fitness_matrix(&self, surrogate: bool) -> Result<(Vec<Vec<f64>>, Vec<[f64; 2]>)> {
        let xs: Vec<Vec<f64>> = self.rows.iter().map(|r| r.x.clone()).collect();
        let fs: Result<Vec<[f64; 2]>> = self
            .rows
            .iter()
            .map(|r| {
                if surrogate {
                    r.f_surrogate.ok_or_else(|| {
                        Error::Config("snapshot has no surrogate fitness columns".into())
                    })
                } else {
                    Ok(r.f_true)
                }
            })
            .collect();
        Ok((xs, fs?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub fe: usize,
    pub x: Vec<f64>,
    pub f: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub problem_id: String,
    pub surrogate: SurrogateKind,
    pub repeat: u32,
    pub seed: u64,
    /// every true evaluation of the optimisation, in spending order
    pub trajectory: Vec<TrajectoryPoint>,
    pub snapshots: Vec<SampleSnapshot>,
    /// normalized hypervolume of the archive front after each evaluation
    pub hypervolumes: Vec<(usize, f64)>,
    pub wall_time: Duration,
    pub true_evals_optimisation: usize,
    /// true evaluations spent on vicinity snapshots, metered separately
    pub true_evals_instrumentation: usize,
}

impl RunLog {
    /// Final normalized hypervolume.
    pub fn final_hypervolume(&self) -> f64 {
        self.hypervolumes.last().map_or(0.0, |(_, hv)| *hv)
    }

    /// Everything but the wall time, for determinism comparisons.
    pub fn deterministic_eq(&self, other: &RunLog) -> bool {
        self.problem_id == other.problem_id
            && self.surrogate == other.surrogate
            && self.repeat == other.repeat
            && self.seed == other.seed
            && self.trajectory == other.trajectory
            && self.snapshots == other.snapshots
            && self.hypervolumes == other.hypervolumes
            && self.true_evals_optimisation == other.true_evals_optimisation
            && self.true_evals_instrumentation == other.true_evals_instrumentation
    }
}

#[derive(Debug, Clone, Copy)]
struct VariationParams {
    eta_c: f64,
    eta_m: f64,
    p_m: f64,
    alpha: f64,
    pop_size: usize,
}

struct EvolutionState {
    parents: Vec<Solution>,
    rvs: ReferenceVectorSet,
    t: u32,
    t_max: u32,
    adapt_every: u32,
}

impl EvolutionState {
    fn new(parents: Vec<Solution>, pop_size: usize, t: u32, t_max: u32) -> Result<Self> {
        let rvs = generate_reference_vectors(pop_size)?;
        let adapt_every = (t_max as f64 * 0.1).ceil().max(1.0) as u32;
        Ok(Self { parents, rvs, t, t_max, adapt_every })
    }
}

fn surrogate_objectives(members: &[Solution]) -> Vec<[f64; 2]> {
    members.iter().map(|s| s.f_surrogate.expect("surrogate fitness set")).collect()
}

/// One generation: variation produces `n_offspring` surrogate-evaluated
/// children, then angle-penalized-distance selection (filled to the
/// population size) forms the next parent set. Returns the children.
fn evolve_generation(
    state: &mut EvolutionState,
    n_offspring: usize,
    model: &mut SurrogateModel,
    problem: &BiObjectiveProblem,
    params: &VariationParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Solution> {
    let space = &problem.space;
    let mut order: Vec<usize> = (0..state.parents.len()).collect();
    order.shuffle(rng);

    let mut offspring: Vec<Solution> = Vec::with_capacity(n_offspring + 1);
    let mut i = 0usize;
    while offspring.len() < n_offspring {
        let a = &state.parents[order[i % order.len()]];
        let b = &state.parents[order[(i + 1) % order.len()]];
        i += 2;
        let (c1, c2) = moea::sbx_crossover(&a.x, &b.x, params.eta_c, space, rng);
        for child in [c1, c2] {
            if offspring.len() == n_offspring {
                break;
            }
            let mutated = moea::polynomial_mutation(&child, params.eta_m, params.p_m, space, rng);
            let mut solution = Solution::new(mutated);
            solution.f_surrogate = Some(model.predict(&solution.x));
            offspring.push(solution);
        }
    }

    let mut combined = state.parents.clone();
    combined.extend(offspring.iter().cloned());
    let objectives = surrogate_objectives(&combined);
    let z_min = [
        objectives.iter().map(|f| f[0]).fold(f64::INFINITY, f64::min),
        objectives.iter().map(|f| f[1]).fold(f64::INFINITY, f64::min),
    ];
    state.t += 1;
    let ctx = ApdContext { alpha: params.alpha, t: state.t, t_max: state.t_max, z_min };
    let chosen = moea::select_parents(&objectives, &state.rvs, &ctx, params.pop_size);
    state.parents = chosen.into_iter().map(|i| combined[i].clone()).collect();

    if state.t % state.adapt_every == 0 {
        let objs = surrogate_objectives(&state.parents);
        let z_min = [
            objs.iter().map(|f| f[0]).fold(f64::INFINITY, f64::min),
            objs.iter().map(|f| f[1]).fold(f64::INFINITY, f64::min),
        ];
        let z_max = [
            objs.iter().map(|f| f[0]).fold(f64::NEG_INFINITY, f64::max),
            objs.iter().map(|f| f[1]).fold(f64::NEG_INFINITY, f64::max),
        ];
        state.rvs = adapt_reference_vectors(&state.rvs, z_min, z_max);
    }

    offspring
}

fn exact_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Sample the vicinity of the population: apply the cycle's selection and
/// variation operators from the given population, accumulating every
/// generated offspring until `budget` surrogate evaluations are spent, then
/// evaluate the deduplicated sample with the true fitness as well.
pub fn sample_vicinity(
    population: &Population,
    model: &mut SurrogateModel,
    problem: &BiObjectiveProblem,
    budget: usize,
    config: &SaeaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SampleSnapshot> {
    if budget == 0 {
        return Err(Error::Config("vicinity sampling needs a positive budget".into()));
    }
    if population.members.is_empty() {
        return Err(Error::Config("vicinity sampling needs a population".into()));
    }
    let params = VariationParams {
        eta_c: config.eta_c,
        eta_m: config.eta_m,
        p_m: config.mutation_probability(problem.space.dim),
        alpha: config.alpha,
        pop_size: config.pop_size,
    };
    // fresh surrogate fitness for the seeds; instrumentation, not budgeted
    let mut parents = population.members.clone();
    for s in &mut parents {
        s.f_surrogate = Some(model.predict(&s.x));
    }
    let t_max = budget.div_ceil(config.pop_size) as u32;
    let mut state = EvolutionState::new(parents, config.pop_size, 0, t_max)?;

    let mut accumulated: Vec<Solution> = Vec::with_capacity(budget);
    while accumulated.len() < budget {
        let n = config.pop_size.min(budget - accumulated.len());
        let offspring = evolve_generation(&mut state, n, model, problem, &params, rng);
        accumulated.extend(offspring);
    }

    // duplicates removed, first occurrence kept
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(accumulated.len());
    let mut unique: Vec<Solution> = Vec::with_capacity(accumulated.len());
    for s in accumulated {
        if seen.insert(exact_key(&s.x)) {
            unique.push(s);
        }
    }
    // exact-bit dedup above; finish with the componentwise tolerance rule
    let mut rows: Vec<SnapshotRow> = Vec::with_capacity(unique.len());
    for s in unique {
        if rows.iter().any(|r| same_point(&r.x, &s.x)) {
            continue;
        }
        let f_true = problem.evaluate(&s.x);
        rows.push(SnapshotRow { x: s.x, f_true, f_surrogate: s.f_surrogate });
    }

    Ok(SampleSnapshot {
        checkpoint_fe: 0,
        rows,
        surrogate: Some(model.kind),
        problem_id: problem.id.clone(),
        repeat: config.repeat,
    })
}

/// A static landscape sample: a Latin hypercube over the box, truly
/// evaluated, with no surrogate fitness columns.
pub fn run_static_sample(
    problem: &BiObjectiveProblem,
    size: usize,
    seed: u64,
) -> Result<SampleSnapshot> {
    if size < 2 {
        return Err(Error::Config("static sample needs at least 2 points".into()));
    }
    let points = latin_hypercube(&problem.space, size, seed)?;
    let rows = points
        .into_iter()
        .map(|x| {
            let f_true = problem.evaluate(&x);
            SnapshotRow { x, f_true, f_surrogate: None }
        })
        .collect();
    Ok(SampleSnapshot {
        checkpoint_fe: 0,
        rows,
        surrogate: None,
        problem_id: problem.id.clone(),
        repeat: 0,
    })
}

/// Keep the best ceil(n/2) candidates by domination rank; ties at the rank
/// boundary are broken uniformly at random.
fn preselect_half(ranks: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = ranks.len();
    let keep = n.div_ceil(2);
    let max_rank = ranks.iter().copied().max().unwrap_or(1);
    let mut kept = Vec::with_capacity(keep);
    for rank in 1..=max_rank {
        let mut group: Vec<usize> = (0..n).filter(|&i| ranks[i] == rank).collect();
        if kept.len() + group.len() <= keep {
            kept.extend(group);
        } else {
            group.shuffle(rng);
            kept.extend(group.into_iter().take(keep - kept.len()));
            break;
        }
        if kept.len() == keep {
            break;
        }
    }
    kept
}

fn uniform_box_point(problem: &BiObjectiveProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    problem
        .space
        .lower
        .iter()
        .zip(&problem.space.upper)
        .map(|(l, u)| rng.random_range(*l..*u))
        .collect()
}

/// Run the full surrogate-assisted optimisation for one problem, surrogate
/// kind, and config. The problem must carry estimated anchors for the
/// hypervolume trace.
pub fn run_saea(
    problem: &BiObjectiveProblem,
    kind: SurrogateKind,
    config: &SaeaConfig,
) -> Result<RunLog> {
    config.validate()?;
    let anchors = problem
        .anchors
        .ok_or_else(|| Error::Config(format!("problem `{}` has no anchors", problem.id)))?;
    let start = Instant::now();
    let seed = config.seed;

    let mut archive = Archive::new();
    let mut trajectory: Vec<TrajectoryPoint> = Vec::with_capacity(config.fe_max_true);
    let mut hypervolumes: Vec<(usize, f64)> = Vec::with_capacity(config.fe_max_true);
    let mut snapshots: Vec<SampleSnapshot> = Vec::new();
    let mut instrumentation = 0usize;

    let hv_now = |archive: &Archive| -> Result<f64> {
        let values: Vec<[f64; 2]> = archive.entries().iter().map(|e| e.y).collect();
        metrics::normalized_hypervolume(&values, anchors.ideal, anchors.nadir)
    };

    // initial population, truly evaluated
    let init = latin_hypercube(&problem.space, config.n_init, seeding::derive_seed(seed, &["init"]))?;
    let mut population = Population { members: Vec::with_capacity(config.n_init), generation: 0 };
    for x in init {
        let f = problem.evaluate(&x);
        let added = archive.push(x.clone(), f);
        debug_assert!(added, "latin hypercube points are distinct");
        trajectory.push(TrajectoryPoint { fe: trajectory.len() + 1, x: x.clone(), f });
        hypervolumes.push((trajectory.len(), hv_now(&archive)?));
        let mut s = Solution::new(x);
        s.f_true = Some(f);
        population.members.push(s);
    }

    let gens_per_cycle = config.fe_max_surrogate.div_ceil(config.pop_size) as u32;
    let total_cycles = (config.fe_max_true - config.n_init).div_ceil(config.mu) as u32;
    let mut global_t = 0u32;

    let take_snapshot = |fe: usize,
                             population: &Population,
                             archive: &Archive,
                             snapshots: &mut Vec<SampleSnapshot>,
                             instrumentation: &mut usize|
     -> Result<()> {
        if !config.checkpoints.contains(&fe) {
            return Ok(());
        }
        let model_seed = seeding::derive_seed(seed, &["snapshot-model", &fe.to_string()]);
        let mut model = SurrogateModel::build(kind, archive, config.lr_knn_k, model_seed)?;
        let mut rng = seeding::stream(seed, &["vicinity", &fe.to_string()]);
        let mut snapshot =
            sample_vicinity(population, &mut model, problem, config.sample_budget, config, &mut rng)?;
        snapshot.checkpoint_fe = fe;
        *instrumentation += snapshot.rows.len();
        snapshots.push(snapshot);
        Ok(())
    };

    take_snapshot(trajectory.len(), &population, &archive, &mut snapshots, &mut instrumentation)?;

    let params = VariationParams {
        eta_c: config.eta_c,
        eta_m: config.eta_m,
        p_m: config.mutation_probability(problem.space.dim),
        alpha: config.alpha,
        pop_size: config.pop_size,
    };

    let mut cycle = 0u64;
    while trajectory.len() < config.fe_max_true {
        cycle += 1;
        let model_seed = seeding::derive_seed(seed, &["model", &cycle.to_string()]);
        let mut model = SurrogateModel::build(kind, &archive, config.lr_knn_k, model_seed)?;
        let mut ea_rng = seeding::stream(seed, &["ea", &cycle.to_string()]);

        // the inner cycle restarts from every truly evaluated solution
        let mut seeds: Vec<Solution> = archive
            .entries()
            .iter()
            .map(|e| {
                let mut s = Solution::new(e.x.clone());
                s.f_true = Some(e.y);
                s
            })
            .collect();
        for s in &mut seeds {
            s.f_surrogate = Some(model.predict(&s.x));
        }
        let (t0, t_max) = if config.global_t {
            (global_t, total_cycles * gens_per_cycle)
        } else {
            (0, gens_per_cycle)
        };
        let mut state = EvolutionState::new(seeds, config.pop_size, t0, t_max)?;

        // optimise the surrogate; only offspring evaluations consume budget
        let mut pool: Vec<Solution> = Vec::with_capacity(config.fe_max_surrogate);
        let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(config.fe_max_surrogate);
        let mut spent = 0usize;
        while spent < config.fe_max_surrogate {
            let n = config.pop_size.min(config.fe_max_surrogate - spent);
            let offspring = evolve_generation(&mut state, n, &mut model, problem, &params, &mut ea_rng);
            spent += offspring.len();
            for s in offspring {
                if seen.insert(exact_key(&s.x)) {
                    pool.push(s);
                }
            }
        }
        global_t = state.t;
        population = Population { members: state.parents.clone(), generation: state.t };

        // pre-select the better half by domination rank, then draw candidates
        let mut sel_rng = seeding::stream(seed, &["select", &cycle.to_string()]);
        let objectives = surrogate_objectives(&pool);
        let ranks = nondominated_sort(&objectives);
        let mut kept = preselect_half(&ranks, &mut sel_rng);
        kept.shuffle(&mut sel_rng);

        let mu_now = config.mu.min(config.fe_max_true - trajectory.len());
        let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(mu_now);
        for idx in kept {
            if chosen.len() == mu_now {
                break;
            }
            let x = &pool[idx].x;
            if archive.contains(x) || chosen.iter().any(|c| same_point(c, x)) {
                continue;
            }
            chosen.push(x.clone());
        }
        while chosen.len() < mu_now {
            // pathological cycle: every candidate already archived
            let x = uniform_box_point(problem, &mut sel_rng);
            if !archive.contains(&x) && !chosen.iter().any(|c| same_point(c, &x)) {
                chosen.push(x);
            }
        }

        for x in chosen {
            let f = problem.evaluate(&x);
            let added = archive.push(x.clone(), f);
            debug_assert!(added, "candidates are deduplicated against the archive");
            trajectory.push(TrajectoryPoint { fe: trajectory.len() + 1, x, f });
            hypervolumes.push((trajectory.len(), hv_now(&archive)?));
            take_snapshot(trajectory.len(), &population, &archive, &mut snapshots, &mut instrumentation)?;
        }
    }

    Ok(RunLog {
        problem_id: problem.id.clone(),
        surrogate: kind,
        repeat: config.repeat,
        seed,
        true_evals_optimisation: trajectory.len(),
        true_evals_instrumentation: instrumentation,
        trajectory,
        snapshots,
        hypervolumes,
        wall_time: start.elapsed(),
    })
}
