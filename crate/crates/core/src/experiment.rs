//! Reproducible random-complex experiments.
//!
//! Every random quantity is drawn from ChaCha20 (`rand_chacha::ChaCha20Rng`)
//! seeded with `seed_from_u64(seed)`: points from stream 0, the initial edge
//! signal from stream 1. ChaCha20 output is specified bit-for-bit, so a seed
//! yields the same instance on every platform.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::complex::SimplicialComplex;
use crate::decomposition::ChainSignal;
use crate::error::{Error, Result};
use crate::flow::{default_time_grid, flow_decomposition_trace, FlowPropagator};
use crate::laplacian::{HodgeLaplacian, WeightAssignment};
use crate::optimizer::{
    optimize_weights, uniform_feasible_weights, Objective, OptimizeOptions, WeightOptimizationResult, WeightSelection,
};
use crate::sdp::SolverOptions;
use crate::spectral::kernel_basis;
use crate::vietoris_rips::{build_vietoris_rips, PointCloud};

/// Seed of the committed reference instance: 30 points, `eps = 0.5`,
/// giving 30 vertices, 170 edges and 413 triangles.
pub const REFERENCE_SEED: u64 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_points: usize,
    pub epsilon: f64,
    pub max_order: usize,
    /// Order `k` of the Laplacian being optimized and simulated.
    pub order: usize,
    pub optimize_lower: bool,
    pub optimize_upper: bool,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Number of samples on each flow trajectory.
    pub flow_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        ExperimentConfig {
            seed: REFERENCE_SEED,
            n_points: 30,
            epsilon: 0.5,
            max_order: 2,
            order: 1,
            optimize_lower: false,
            optimize_upper: true,
            gap_tol: solver.gap_tol,
            feas_tol: solver.feas_tol,
            max_iter: solver.max_iter,
            flow_samples: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn selection(&self) -> WeightSelection {
        WeightSelection { lower: self.optimize_lower, upper: self.optimize_upper }
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        OptimizeOptions {
            solver: SolverOptions {
                gap_tol: self.gap_tol,
                feas_tol: self.feas_tol,
                max_iter: self.max_iter,
                ..SolverOptions::default()
            },
            ..OptimizeOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidPointCloud(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_order == 0 {
            return Err(Error::OrderOutOfRange { order: 0, min: 1, max: usize::MAX });
        }
        if self.flow_samples < 2 {
            return Err(Error::Parse("flow_samples must be at least 2".into()));
        }
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::Parse("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub points: PointCloud,
    pub complex: SimplicialComplex,
}

/// Samples `n_points` uniformly on the unit square and builds their Vietoris–Rips complex.
pub fn generate(config: &ExperimentConfig) -> Result<Instance> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let points = PointCloud::uniform_unit_square(config.n_points, &mut rng);
    let complex = build_vietoris_rips(&points, config.epsilon, config.max_order)?;
    log::info!("seed {}: simplex counts {:?}", config.seed, complex.counts());
    Ok(Instance { points, complex })
}

/// Standard-normal initial signal of length `len`, from stream 1 of the seed.
pub fn initial_signal(seed: u64, len: usize) -> DVector<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    DVector::from_iterator(len, (0..len).map(|_| StandardNormal.sample(&mut rng)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageState {
    Ok,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageStatus {
    pub status: StageState,
    pub message: Option<String>,
    /// Wall-clock time spent in the stage.
    pub seconds: f64,
}

impl StageStatus {
    fn ok() -> Self {
        StageStatus { status: StageState::Ok, message: None, seconds: 0.0 }
    }

    fn timed(mut self, start: Instant) -> Self {
        self.seconds = start.elapsed().as_secs_f64();
        self
    }

    fn from_error(e: &Error) -> Self {
        let status = match e {
            Error::InvalidProblem(_) | Error::Degenerate(_) => StageState::Skipped,
            _ => StageState::Failed,
        };
        StageStatus { status, message: Some(e.to_string()), seconds: 0.0 }
    }

    fn pending(reason: &str) -> Self {
        StageStatus { status: StageState::Skipped, message: Some(reason.into()), seconds: 0.0 }
    }
}

/// Non-harmonic flow norms compared at `t_eval = 5 / lambda_min(uniform)`.
#[derive(Clone, Debug, Serialize)]
pub struct FlowComparison {
    pub t_eval: f64,
    pub t_max: f64,
    pub lambda_min_uniform: f64,
    pub initial_non_harmonic_norm: f64,
    pub non_harmonic_norm_uniform: f64,
    pub non_harmonic_norm_lambda_optimal: Option<f64>,
    pub non_harmonic_norm_trace_optimal: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub config: ExperimentConfig,
    pub simplex_counts: Vec<usize>,
    pub betti: Option<usize>,
    /// `generate`, `optimize_trace`, `optimize_lambda`, `flow`.
    pub stages: BTreeMap<String, StageStatus>,
    pub trace: Option<WeightOptimizationResult>,
    pub lambda: Option<WeightOptimizationResult>,
    pub flow: Option<FlowComparison>,
}

impl PipelineReport {
    /// Whether both optimizations finished with an optimal, accurate solution.
    pub fn all_optimal(&self) -> bool {
        [&self.trace, &self.lambda].iter().all(|r| r.as_ref().is_some_and(|r| r.is_optimal()))
    }
}

/// A trajectory ready to be written as `<name>.csv`.
#[derive(Clone, Debug)]
pub struct NamedTrajectory {
    pub name: String,
    pub csv: String,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub instance: Instance,
    pub report: PipelineReport,
    pub trajectories: Vec<NamedTrajectory>,
}

/// generate, optimize both objectives, then simulate the flow from a common
/// initial signal under uniform and optimized weights.
///
/// Stage failures are recorded in the report rather than returned.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineOutput> {
    let start = Instant::now();
    let instance = generate(config)?;
    let complex = &instance.complex;
    let k = config.order;
    let sel = config.selection();
    let opts = config.optimize_options();

    let mut stages = BTreeMap::new();
    stages.insert("generate".to_string(), StageStatus::ok().timed(start));
    let betti = kernel_basis(complex, k).ok().map(|kb| kb.betti);

    let mut results: BTreeMap<&str, WeightOptimizationResult> = BTreeMap::new();
    for (name, objective) in [("trace", Objective::TracePinv), ("lambda", Objective::LambdaMin)] {
        let start = Instant::now();
        let status = match optimize_weights(complex, k, objective, sel, &opts) {
            Ok(r) => {
                let s = if r.is_optimal() {
                    StageStatus::ok()
                } else {
                    StageStatus {
                        status: StageState::Failed,
                        message: Some(format!(
                            "solver status {:?}, SDP/direct agreement {}",
                            r.certificate.status, r.accurate
                        )),
                        seconds: 0.0,
                    }
                };
                results.insert(name, r);
                s
            }
            Err(e) => {
                log::warn!("{name} optimization: {e}");
                StageStatus::from_error(&e)
            }
        };
        stages.insert(format!("optimize_{name}"), status.timed(start));
    }

    let mut trajectories = Vec::new();
    let start = Instant::now();
    let flow = match flow_stage(complex, config, &results, &mut trajectories) {
        Ok(f) => {
            stages.insert("flow".into(), StageStatus::ok().timed(start));
            Some(f)
        }
        Err(e) => {
            log::warn!("flow stage: {e}");
            let status = if results.is_empty() {
                StageStatus::pending("no optimized weights to compare")
            } else {
                StageStatus::from_error(&e)
            };
            stages.insert("flow".into(), status.timed(start));
            None
        }
    };

    let report = PipelineReport {
        config: config.clone(),
        simplex_counts: complex.counts(),
        betti,
        stages,
        trace: results.remove("trace"),
        lambda: results.remove("lambda"),
        flow,
    };
    Ok(PipelineOutput { instance, report, trajectories })
}

fn flow_stage(
    complex: &SimplicialComplex,
    config: &ExperimentConfig,
    results: &BTreeMap<&str, WeightOptimizationResult>,
    trajectories: &mut Vec<NamedTrajectory>,
) -> Result<FlowComparison> {
    let k = config.order;
    let uniform = uniform_feasible_weights(complex, k, config.selection())?;
    let x0 = ChainSignal::new(complex, k, initial_signal(config.seed, complex.count(k)))?;
    let base = FlowPropagator::new(&HodgeLaplacian::assemble(complex, &uniform, k)?)?;
    let lambda_min_uniform = base.lambda_min_nonzero()?;
    let t_eval = 5.0 / lambda_min_uniform;
    let t_max = 10.0 / lambda_min_uniform;
    let times = default_time_grid(t_max, config.flow_samples);

    let norm_at = |weights: &WeightAssignment| -> Result<f64> {
        let prop = FlowPropagator::new(&HodgeLaplacian::assemble(complex, weights, k)?)?;
        let diff = prop.evolve(&x0.values, t_eval) - prop.harmonic_projection(&x0.values);
        Ok(crate::flow::weighted_norm(&diff, &weights.order(k)))
    };
    let initial_non_harmonic_norm =
        crate::flow::weighted_norm(&(&x0.values - base.harmonic_projection(&x0.values)), &uniform.order(k));

    let mut record = |name: &str, weights: &WeightAssignment| -> Result<()> {
        let (traj, comps) = flow_decomposition_trace(complex, weights, &x0, &times)?;
        trajectories.push(NamedTrajectory { name: format!("flow_{name}"), csv: traj.to_csv(Some(&comps)) });
        Ok(())
    };
    record("uniform", &uniform)?;
    let mut optimal_norm = |key: &str| -> Result<Option<f64>> {
        match results.get(key) {
            Some(r) => {
                record(&format!("{key}_optimal"), &r.weights)?;
                Ok(Some(norm_at(&r.weights)?))
            }
            None => Ok(None),
        }
    };
    let non_harmonic_norm_lambda_optimal = optimal_norm("lambda")?;
    let non_harmonic_norm_trace_optimal = optimal_norm("trace")?;
    Ok(FlowComparison {
        t_eval,
        t_max,
        lambda_min_uniform,
        initial_non_harmonic_norm,
        non_harmonic_norm_uniform: norm_at(&uniform)?,
        non_harmonic_norm_lambda_optimal,
        non_harmonic_norm_trace_optimal,
    })
}
