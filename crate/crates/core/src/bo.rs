//! The many-objective BO loop with similarity-driven objective reduction.
//!
//! Iterations are counted in completed evaluations: after the initial design
//! `t = n_init`, and each proposal adds one row. At every `t ≥ delta_start`
//! the loop may drop one objective before proposing the next point, so a
//! removal at `t₀` saves exactly `T − t₀` evaluations of that objective.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{make_problem, BenchmarkError, NoiseSpec, Problem, ProblemSpec};
use crate::gp::{fit_map, FitOptions, GpError, GpModel, KernelFamily, PredictiveSummary};
use crate::pareto::{hypervolume, pareto_front, ParetoError, ParetoFront};
use crate::qmc::{scale_to_box, scale_to_unit, Sobol};
use crate::seeds::{derive_seed, stream};
use crate::similarity::{gp_distance, SimilarityConfig, SimilarityError, SimilarityReport};

/// Weight of the linear term in the augmented Chebyshev scalarization.
pub const CHEBYSHEV_AUGMENTATION: f64 = 0.05;

#[derive(Debug, Error)]
pub enum BoError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] BenchmarkError),
    #[error("GP fit for objective {objective} failed at iteration {iteration}: {source}")]
    Fit {
        iteration: usize,
        objective: usize,
        source: GpError,
    },
    #[error("similarity at iteration {iteration}: {source}")]
    Similarity {
        iteration: usize,
        source: SimilarityError,
    },
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    /// Number of low-discrepancy candidate points scored per iteration.
    pub candidates: usize,
    /// Monte Carlo draws per candidate for the expected improvement.
    pub samples: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            candidates: 1000,
            samples: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kernel: KernelFamily,
    pub restarts: usize,
    pub max_iters: usize,
    /// Probe-grid size per input dimension for similarity comparisons.
    pub probe_points_per_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kernel: KernelFamily::Matern52,
            restarts: 5,
            max_iters: 200,
            probe_points_per_dim: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Total evaluation budget T, initial design included.
    pub max_evaluations: usize,
    pub n_init: usize,
    /// First iteration at which reduction may remove an objective.
    pub delta_start: usize,
    /// Pairs with distance strictly below this are redundant.
    pub epsilon: f64,
    pub reduction: bool,
    pub similarity: SimilarityConfig,
    /// Hypervolume reference point over all objectives.
    pub reference: Option<Vec<f64>>,
    pub seed: u64,
    pub acquisition: AcquisitionConfig,
    pub model: ModelConfig,
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, max_evaluations: usize, seed: u64) -> Self {
        RunConfig {
            problem,
            max_evaluations,
            n_init: 5,
            delta_start: 10,
            epsilon: 0.1,
            reduction: true,
            similarity: SimilarityConfig::default(),
            reference: None,
            seed,
            acquisition: AcquisitionConfig::default(),
            model: ModelConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), BoError> {
        let bad = |m: String| Err(BoError::Config(m));
        self.problem.validate()?;
        if self.n_init < 2 {
            return bad(format!("n_init = {} must be at least 2", self.n_init));
        }
        if self.max_evaluations < self.n_init {
            return bad(format!(
                "max_evaluations = {} is smaller than n_init = {}",
                self.max_evaluations, self.n_init
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon = {} must lie in [0, 1]", self.epsilon));
        }
        self.similarity.validate().map_err(|e| BoError::Config(e.to_string()))?;
        if self.acquisition.candidates == 0 || self.acquisition.samples == 0 {
            return bad("acquisition candidates and samples must be positive".into());
        }
        if self.model.restarts == 0 || self.model.probe_points_per_dim < 1 {
            return bad("model restarts and probe_points_per_dim must be positive".into());
        }
        if self.problem.dim() > crate::qmc::MAX_DIMS {
            return bad(format!("at most {} input dimensions are supported", crate::qmc::MAX_DIMS));
        }
        if let Some(r) = &self.reference {
            if r.len() != self.problem.num_objectives() {
                return bad(format!(
                    "reference has {} entries but the problem has {} objectives",
                    r.len(),
                    self.problem.num_objectives()
                ));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return bad("reference point must be finite".into());
            }
        }
        Ok(())
    }
}

/// Observed inputs and (possibly missing) noisy evaluations, one row per point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    /// `None` where an objective was not evaluated because it had been removed.
    pub y: Vec<Vec<Option<f64>>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<Option<f64>> {
        self.y.iter().map(|row| row[k]).collect()
    }

    /// Number of evaluations of each objective.
    pub fn evaluation_counts(&self, num_objectives: usize) -> Vec<usize> {
        (0..num_objectives)
            .map(|k| self.y.iter().filter(|row| row[k].is_some()).count())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionEvent {
    pub iteration: usize,
    pub removed: usize,
    pub kept: usize,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    #[serde(flatten)]
    pub report: SimilarityReport,
}

#[derive(Clone, Debug)]
pub struct OptState {
    pub dataset: Dataset,
    /// Original indices of objectives still being modelled, ascending.
    pub active: Vec<usize>,
    pub iteration: usize,
    /// One model per entry of `active`, fit in unit-cube input coordinates.
    pub models: Vec<GpModel>,
    pub reduction_log: Vec<ReductionEvent>,
    pub noise_sigmas: Vec<f64>,
}

impl OptState {
    pub fn new(dataset: Dataset, noise_sigmas: Vec<f64>) -> Self {
        let k = noise_sigmas.len();
        OptState {
            iteration: dataset.len(),
            dataset,
            active: (0..k).collect(),
            models: Vec::new(),
            reduction_log: Vec::new(),
            noise_sigmas,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub active: Vec<usize>,
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
    pub weights: Vec<f64>,
    pub acquisition: f64,
    pub fallback: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub distances: Vec<PairDistance>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub removed: Option<ReductionEvent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub objective_labels: Vec<String>,
    pub noise_sigmas: Vec<f64>,
    pub n_init: usize,
    pub dataset: Dataset,
    pub trace: Vec<IterationRecord>,
    pub reduction_log: Vec<ReductionEvent>,
    pub final_active: Vec<usize>,
    pub evaluations: Vec<usize>,
    pub reference: Vec<f64>,
    pub front: ParetoFront,
    pub hypervolume: f64,
}

impl RunResult {
    /// Evaluations of each objective avoided relative to evaluating every
    /// objective at every point.
    pub fn evaluations_saved(&self) -> Vec<usize> {
        self.evaluations
            .iter()
            .map(|e| self.dataset.len() - e)
            .collect()
    }
}

fn draw_noise(config: &RunConfig, row: usize, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, stream::NOISE, row as u64));
    let draws: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    if config.problem.shared_noise {
        vec![draws[0]; k]
    } else {
        draws
    }
}

/// The seeded low-discrepancy initial design, every objective evaluated.
/// Returns the dataset and the per-objective noise standard deviations.
pub fn initial_design(config: &RunConfig, problem: &Problem) -> Result<(Dataset, Vec<f64>), BoError> {
    let k = problem.num_objectives();
    let sobol = Sobol::scrambled(problem.dim(), derive_seed(config.seed, stream::DESIGN, 0));
    let x: Vec<Vec<f64>> = sobol
        .points(config.n_init)
        .iter()
        .map(|u| scale_to_box(u, problem.bounds()))
        .collect();
    let clean: Vec<Vec<f64>> = x.iter().map(|xi| problem.eval(xi)).collect::<Result<_, _>>()?;
    let sigmas: Vec<f64> = match config.problem.noise {
        NoiseSpec::Absolute { sigma } => vec![sigma; k],
        NoiseSpec::Relative { fraction } => (0..k)
            .map(|j| {
                let (lo, hi) = clean
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
                fraction * (hi - lo)
            })
            .collect(),
    };
    let y = clean
        .iter()
        .enumerate()
        .map(|(row, vals)| {
            let z = draw_noise(config, row, k);
            vals.iter()
                .zip(&sigmas)
                .zip(&z)
                .map(|((v, s), z)| Some(v + s * z))
                .collect()
        })
        .collect();
    Ok((Dataset { x, y }, sigmas))
}

/// Augmented Chebyshev scalarization of normalized objective values.
pub fn scalarize_chebyshev(y_normalized: &[f64], weights: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for (y, w) in y_normalized.iter().zip(weights) {
        max = max.max(w * y);
        sum += w * y;
    }
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    max + CHEBYSHEV_AUGMENTATION * sum
}

/// Per-objective min-max normalization from observed values.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Normalizer {
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let (lo, hi) = columns
            .iter()
            .map(|c| {
                c.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
            })
            .unzip();
        Normalizer { lo, hi }
    }

    /// Maps into `[0, 1]` on the observed range; degenerate ranges map to 0.
    pub fn normalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| {
                let range = hi - lo;
                if range > 0.0 && range.is_finite() { (v - lo) / range } else { 0.0 }
            })
            .collect()
    }
}

/// Draws a weight vector uniformly from the probability simplex.
pub fn simplex_weights<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

/// Monte Carlo expected improvement of the scalarized objective at one
/// candidate. `z[s][k]` are standard-normal draws shared across candidates.
pub fn expected_improvement(
    mean: &[f64],
    variance: &[f64],
    normalizer: &Normalizer,
    weights: &[f64],
    incumbent: f64,
    z: &[Vec<f64>],
) -> f64 {
    let sd: Vec<f64> = variance.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut sample = vec![0.0; mean.len()];
    let mut total = 0.0;
    for zs in z {
        for (k, s) in sample.iter_mut().enumerate() {
            *s = mean[k] + sd[k] * zs[k];
        }
        let g = scalarize_chebyshev(&normalizer.normalize(&sample), weights);
        total += (incumbent - g).max(0.0);
    }
    total / z.len() as f64
}

/// Index and value of the largest positive EI; ties go to the lowest index.
pub fn select_candidate(
    means: &[Vec<f64>],
    variances: &[Vec<f64>],
    normalizer: &Normalizer,
    weights: &[f64],
    incumbent: f64,
    z: &[Vec<f64>],
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (c, (m, v)) in means.iter().zip(variances).enumerate() {
        let ei = expected_improvement(m, v, normalizer, weights, incumbent, z);
        if ei > 0.0 && best.is_none_or(|(_, b)| ei > b) {
            best = Some((c, ei));
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub x: Vec<f64>,
    pub weights: Vec<f64>,
    pub acquisition: f64,
    pub fallback: bool,
}

/// Picks the next input by maximizing scalarized EI over a candidate set.
pub fn propose_next(state: &OptState, config: &RunConfig) -> Result<Proposal, BoError> {
    let bounds = &config.problem.bounds;
    let d = bounds.len();
    let k = state.active.len();
    let t = state.iteration as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, stream::ACQUISITION, t));
    let weights = simplex_weights(k, &mut rng);
    let z: Vec<Vec<f64>> = (0..config.acquisition.samples)
        .map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect())
        .collect();

    let observed: Vec<Vec<f64>> = state
        .active
        .iter()
        .map(|&j| state.dataset.column(j).into_iter().map(|v| v.expect("active objective observed")).collect())
        .collect();
    let normalizer = Normalizer::from_columns(&observed);
    let incumbent = (0..state.dataset.len())
        .map(|r| {
            let row: Vec<f64> = observed.iter().map(|c| c[r]).collect();
            scalarize_chebyshev(&normalizer.normalize(&row), &weights)
        })
        .fold(f64::INFINITY, f64::min);

    let sobol = Sobol::scrambled(d, derive_seed(config.seed, stream::ACQUISITION, t + (1 << 32)));
    let unit = sobol.points(config.acquisition.candidates);
    let grid = DMatrix::from_fn(unit.len(), d, |i, j| unit[i][j]);
    let summaries: Vec<PredictiveSummary> = state
        .models
        .iter()
        .zip(&state.active)
        .map(|(m, &j)| {
            m.predict(&grid).map_err(|source| BoError::Fit {
                iteration: state.iteration,
                objective: j,
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let means: Vec<Vec<f64>> = (0..unit.len())
        .map(|c| summaries.iter().map(|s| s.mean[c]).collect())
        .collect();
    let variances: Vec<Vec<f64>> = (0..unit.len())
        .map(|c| summaries.iter().map(|s| s.variance[c]).collect())
        .collect();

    match select_candidate(&means, &variances, &normalizer, &weights, incumbent, &z) {
        Some((c, ei)) => Ok(Proposal {
            x: scale_to_box(&unit[c], bounds),
            weights,
            acquisition: ei,
            fallback: false,
        }),
        None => {
            let mut fb = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, stream::FALLBACK, t));
            let u: Vec<f64> = (0..d).map(|_| fb.random::<f64>()).collect();
            log::info!("iteration {}: acquisition is zero everywhere, sampling a random point", state.iteration);
            Ok(Proposal {
                x: scale_to_box(&u, bounds),
                weights,
                acquisition: 0.0,
                fallback: true,
            })
        }
    }
}

/// Shared unit-cube probe grid used for every similarity comparison in a run.
pub fn probe_grid(config: &RunConfig) -> DMatrix<f64> {
    let d = config.problem.dim();
    let m = config.model.probe_points_per_dim * d;
    let pts = Sobol::scrambled(d, derive_seed(config.seed, stream::PROBE, 0)).points(m);
    DMatrix::from_fn(m, d, |i, j| pts[i][j])
}

/// Fits one MAP GP per active objective on the current data.
pub fn fit_active_models(state: &mut OptState, config: &RunConfig) -> Result<(), BoError> {
    let bounds = &config.problem.bounds;
    let d = bounds.len();
    let n = state.dataset.len();
    let x = DMatrix::from_fn(n, d, |i, j| scale_to_unit(&state.dataset.x[i], bounds)[j]);
    let opts = FitOptions {
        restarts: config.model.restarts,
        seed: derive_seed(config.seed, stream::FIT, state.iteration as u64),
        input_widths: Some(vec![1.0; d]),
        max_iters: config.model.max_iters,
        ..Default::default()
    };
    let iteration = state.iteration;
    let dataset = &state.dataset;
    state.models = state
        .active
        .par_iter()
        .map(|&j| {
            let y = DVector::from_iterator(n, dataset.column(j).into_iter().map(|v| v.expect("active objective observed")));
            fit_map(&x, &y, config.model.kernel, &opts).map_err(|source| BoError::Fit {
                iteration,
                objective: j,
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(())
}

/// Pairwise distances between active objectives on the probe grid, in
/// lexicographic `(i, j)` order over original indices.
pub fn pairwise_distances(
    state: &OptState,
    grid: &DMatrix<f64>,
    similarity: &SimilarityConfig,
) -> Result<Vec<PairDistance>, BoError> {
    let wrap = |source| BoError::Similarity {
        iteration: state.iteration,
        source,
    };
    let summaries: Vec<PredictiveSummary> = state
        .models
        .iter()
        .zip(&state.active)
        .map(|(m, &j)| {
            m.predict(grid).map_err(|source| BoError::Fit {
                iteration: state.iteration,
                objective: j,
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for a in 0..state.active.len() {
        for b in a + 1..state.active.len() {
            let report = gp_distance(&summaries[a], &summaries[b], similarity).map_err(wrap)?;
            out.push(PairDistance {
                i: state.active[a],
                j: state.active[b],
                report,
            });
        }
    }
    Ok(out)
}

/// Removes the lower-index member of the first pair closer than `epsilon`.
/// Returns all pairwise distances and the removal, if any.
pub fn reduce_objectives(
    state: &mut OptState,
    config: &RunConfig,
    grid: &DMatrix<f64>,
) -> Result<(Vec<PairDistance>, Option<ReductionEvent>), BoError> {
    if state.active.len() < 2 {
        return Ok((Vec::new(), None));
    }
    let pairs = pairwise_distances(state, grid, &config.similarity)?;
    let hit = pairs.iter().find(|p| p.report.total < config.epsilon);
    let event = hit.map(|p| ReductionEvent {
        iteration: state.iteration,
        removed: p.i,
        kept: p.j,
        distance: p.report.total,
    });
    if let Some(e) = event {
        let pos = state.active.iter().position(|&a| a == e.removed).expect("removed objective is active");
        state.active.remove(pos);
        if pos < state.models.len() {
            state.models.remove(pos);
        }
        state.reduction_log.push(e);
        log::info!(
            "iteration {}: removed objective {} (distance {:.4} to objective {})",
            e.iteration,
            e.removed,
            e.distance,
            e.kept
        );
    }
    Ok((pairs, event))
}

/// Reference point from noiseless values of every observed input: maximum
/// plus 10% of the range per objective.
pub fn default_reference(problem: &Problem, dataset: &Dataset) -> Result<Vec<f64>, BoError> {
    let k = problem.num_objectives();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for x in &dataset.x {
        for (j, v) in problem.eval(x)?.into_iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    Ok(hi.iter().zip(&lo).map(|(h, l)| h + 0.1 * (h - l)).collect())
}

/// Non-dominated observed points on the active objectives, re-evaluated
/// noiselessly on every objective, and their hypervolume.
pub fn recommend(state: &OptState, problem: &Problem, reference: &[f64]) -> Result<(ParetoFront, f64), BoError> {
    let rows: Vec<Vec<f64>> = state
        .dataset
        .y
        .iter()
        .map(|row| state.active.iter().map(|&j| row[j].expect("active objective observed")).collect())
        .collect();
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    for i in pareto_front(&rows) {
        let x = &state.dataset.x[i];
        if !inputs.contains(x) {
            inputs.push(x.clone());
        }
    }
    let values: Vec<Vec<f64>> = inputs.iter().map(|x| problem.eval(x)).collect::<Result<_, _>>()?;
    let front = ParetoFront::from_points(values, inputs, reference.to_vec());
    let hv = hypervolume(&front.points, reference)?;
    Ok((front, hv))
}

/// Runs the full loop: initial design, then fit, reduce, propose and
/// evaluate until the budget is spent.
pub fn run(config: &RunConfig) -> Result<RunResult, BoError> {
    config.validate()?;
    let problem = make_problem(&config.problem)?;
    let k = problem.num_objectives();
    let (dataset, sigmas) = initial_design(config, &problem)?;
    let mut state = OptState::new(dataset, sigmas);
    let grid = probe_grid(config);
    let mut trace = Vec::new();

    while state.dataset.len() < config.max_evaluations {
        state.iteration = state.dataset.len();
        fit_active_models(&mut state, config)?;
        let (distances, removed) =
            if config.reduction && state.iteration >= config.delta_start && state.active.len() >= 2 {
                reduce_objectives(&mut state, config, &grid)?
            } else {
                (Vec::new(), None)
            };
        let proposal = propose_next(&state, config)?;
        let z = draw_noise(config, state.dataset.len(), k);
        let mut y = vec![None; k];
        for &j in &state.active {
            let clean = problem.eval_objective(j, &proposal.x)?;
            y[j] = Some(clean + state.noise_sigmas[j] * z[j]);
        }
        log::debug!(
            "iteration {}: active {:?}, x = {:?}, acquisition {:.3e}",
            state.iteration,
            state.active,
            proposal.x,
            proposal.acquisition
        );
        trace.push(IterationRecord {
            iteration: state.iteration,
            active: state.active.clone(),
            x: proposal.x.clone(),
            y: y.clone(),
            weights: proposal.weights,
            acquisition: proposal.acquisition,
            fallback: proposal.fallback,
            distances,
            removed,
        });
        state.dataset.x.push(proposal.x);
        state.dataset.y.push(y);
    }
    state.iteration = state.dataset.len();

    let reference = match &config.reference {
        Some(r) => r.clone(),
        None => default_reference(&problem, &state.dataset)?,
    };
    let (front, hv) = recommend(&state, &problem, &reference)?;
    Ok(RunResult {
        config: config.clone(),
        objective_labels: config.problem.objectives.iter().map(|o| o.label()).collect(),
        noise_sigmas: state.noise_sigmas.clone(),
        n_init: config.n_init,
        evaluations: state.dataset.evaluation_counts(k),
        dataset: state.dataset,
        trace,
        reduction_log: state.reduction_log,
        final_active: state.active,
        reference,
        front,
        hypervolume: hv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{preset, Benchmark, ObjectiveSpec};
    use crate::gp::KernelSpec;

    fn quick(problem: ProblemSpec, t: usize, seed: u64) -> RunConfig {
        let mut c = RunConfig::new(problem, t, seed);
        c.acquisition.candidates = 200;
        c.model.restarts = 2;
        c.model.probe_points_per_dim = 100;
        c
    }

    #[test]
    fn chebyshev_hand_cases() {
        assert!((scalarize_chebyshev(&[0.4, 0.9], &[1.0, 0.0]) - 0.42).abs() < 1e-15);
        assert_eq!(scalarize_chebyshev(&[0.0, 0.0, 0.0], &[0.2, 0.3, 0.5]), 0.0);
        let c = 0.6;
        let v = scalarize_chebyshev(&[c; 4], &[0.25; 4]);
        assert!((v - (0.25 * c + 0.05 * c)).abs() < 1e-15);
    }

    #[test]
    fn normalizer_handles_degenerate_range() {
        let n = Normalizer::from_columns(&[vec![1.0, 3.0], vec![2.0, 2.0]]);
        assert_eq!(n.normalize(&[2.0, 7.0]), vec![0.5, 0.0]);
    }

    #[test]
    fn weights_lie_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 1..6 {
            let w = simplex_weights(k, &mut rng);
            assert!(w.iter().all(|v| *v >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_variance_ei_is_plain_improvement() {
        let norm = Normalizer { lo: vec![0.0], hi: vec![10.0] };
        let z = vec![vec![0.3], vec![-1.2]];
        let means = vec![vec![6.0], vec![2.0], vec![8.0]];
        let vars = vec![vec![0.0]; 3];
        let (c, ei) = select_candidate(&means, &vars, &norm, &[1.0], 0.5 * 1.05, &z).unwrap();
        assert_eq!(c, 1);
        assert!((ei - (0.525 - 0.2 * 1.05)).abs() < 1e-12);
        // no candidate improves
        assert!(select_candidate(&means, &vars, &norm, &[1.0], 0.1, &z).is_none());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let norm = Normalizer { lo: vec![0.0], hi: vec![1.0] };
        let z = vec![vec![0.0]];
        let means = vec![vec![0.9], vec![0.2], vec![0.2]];
        let vars = vec![vec![0.0]; 3];
        assert_eq!(select_candidate(&means, &vars, &norm, &[1.0], 1.0, &z).unwrap().0, 1);
    }

    fn branin_config(t: usize, seed: u64) -> RunConfig {
        let mut c = quick(preset("branin3").unwrap(), t, seed);
        c.delta_start = 8;
        c.epsilon = 0.05;
        c
    }

    #[test]
    fn initial_design_contract() {
        let c = branin_config(10, 3);
        let p = make_problem(&c.problem).unwrap();
        let (d, sig) = initial_design(&c, &p).unwrap();
        assert_eq!(d.len(), 5);
        for (x, y) in d.x.iter().zip(&d.y) {
            assert!(x.iter().zip(p.bounds()).all(|(v, (lo, hi))| v >= lo && v <= hi));
            assert!(y.iter().all(|v| v.unwrap().is_finite()));
        }
        assert_eq!(initial_design(&c, &p).unwrap().0, d);
        assert!(sig.iter().all(|s| *s > 0.0));

        let mut quiet = c.clone();
        quiet.problem.noise = NoiseSpec::none();
        let (d, _) = initial_design(&quiet, &p).unwrap();
        for (x, y) in d.x.iter().zip(&d.y) {
            let clean = p.eval(x).unwrap();
            assert_eq!(y.iter().map(|v| v.unwrap()).collect::<Vec<_>>(), clean);
        }
    }

    #[test]
    fn zero_variance_everywhere_triggers_fallback() {
        let spec = ProblemSpec::new(vec![ObjectiveSpec::plain(Benchmark::Sphere)], vec![(-1.0, 1.0); 2]);
        let c = quick(spec, 6, 1);
        let x = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let kernel = KernelSpec::new(KernelFamily::SquaredExponential, vec![1e3; 2], 1e-12, 0.0).unwrap();
        let model = GpModel::new(kernel, x, DVector::from_vec(vec![0.0, 0.0])).unwrap();
        let dataset = Dataset {
            x: vec![vec![0.0, 0.0]; 2],
            y: vec![vec![Some(0.0)]; 2],
        };
        let mut state = OptState::new(dataset, vec![0.0]);
        state.models = vec![model];
        let p = propose_next(&state, &c).unwrap();
        assert!(p.fallback);
        assert!(p.x.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn budget_equal_to_initial_design_skips_the_loop() {
        let r = run(&branin_config(5, 2)).unwrap();
        assert!(r.trace.is_empty());
        assert_eq!(r.dataset.len(), 5);
        assert!(!r.front.is_empty());
    }

    #[test]
    fn reduction_gated_beyond_budget() {
        let mut c = branin_config(9, 2);
        c.delta_start = 50;
        let r = run(&c).unwrap();
        assert!(r.reduction_log.is_empty());
        assert!(r.trace.iter().all(|t| t.distances.is_empty()));
        assert_eq!(r.evaluations, vec![9, 9, 9]);
    }

    #[test]
    fn branin_redundancy_detected_at_start() {
        let c = branin_config(11, 5);
        let r = run(&c).unwrap();
        assert_eq!(r.reduction_log.len(), 1, "{:?}", r.trace.iter().map(|t| &t.distances).collect::<Vec<_>>());
        let e = r.reduction_log[0];
        assert_eq!((e.iteration, e.removed, e.kept), (8, 0, 1));
        assert_eq!(r.final_active, vec![1, 2]);
        assert_eq!(r.evaluations_saved(), vec![11 - 8, 0, 0]);
    }

    #[test]
    fn same_seed_same_result() {
        let c = branin_config(9, 7);
        let a = serde_json::to_string(&run(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_observations_give_a_singleton_front() {
        let spec = ProblemSpec::new(vec![ObjectiveSpec::plain(Benchmark::Sphere); 2], vec![(-1.0, 1.0); 2]);
        let p = make_problem(&spec).unwrap();
        let dataset = Dataset {
            x: vec![vec![0.3, 0.3]; 4],
            y: vec![vec![Some(0.18), Some(0.18)]; 4],
        };
        let state = OptState::new(dataset, vec![0.0; 2]);
        let (front, hv) = recommend(&state, &p, &[1.0, 1.0]).unwrap();
        assert_eq!(front.len(), 1);
        assert!((hv - 0.82 * 0.82).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = branin_config(10, 0);
        c.epsilon = 1.5;
        assert!(matches!(c.validate(), Err(BoError::Config(m)) if m.contains("epsilon")));
        let mut c = branin_config(3, 0);
        c.n_init = 5;
        assert!(c.validate().is_err());
        let mut c = branin_config(10, 0);
        c.reference = Some(vec![1.0]);
        assert!(c.validate().is_err());
    }
}
