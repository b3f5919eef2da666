//! Hodge Laplacian flows `dx/dt = -L_k x`.
//!
//! Trajectories are evaluated exactly from the eigendecomposition of the
//! symmetric form: `x(t) = W^{-1/2} V exp(-Λ t) V^T W^{1/2} x0`.

use nalgebra::{DMatrix, DVector};

use crate::complex::SimplicialComplex;
use crate::decomposition::{ChainSignal, DecompositionMethod, HodgeDecomposer};
use crate::error::{Error, Result};
use crate::laplacian::{HodgeLaplacian, WeightAssignment};
use crate::linalg::all_finite;
use crate::spectral::{lambda_min_nonzero_from, spectrum, SpectralData};

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub order: usize,
    pub times: Vec<f64>,
    /// One row per sample time.
    pub states: DMatrix<f64>,
    /// Projection of the initial condition onto `ker L_k`.
    pub harmonic_limit: DVector<f64>,
    /// `W_k` of the flow, kept for norm computations.
    pub weights: DVector<f64>,
}

impl FlowTrajectory {
    pub fn state(&self, i: usize) -> DVector<f64> {
        self.states.row(i).transpose()
    }

    /// `||x(t_i) - x_inf||` in the `W_k^{1/2}` coordinates, for every sample.
    pub fn non_harmonic_norms(&self) -> Vec<f64> {
        (0..self.times.len()).map(|i| weighted_norm(&(self.state(i) - &self.harmonic_limit), &self.weights)).collect()
    }

    pub fn to_csv(&self, component_norms: Option<&ComponentTrace>) -> String {
        let mut out = String::new();
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(self.states.row(i).iter().map(|x| format!("{x:.16e}")));
            if let Some(c) = component_norms {
                row.push(format!("{:.16e}", c.gradient_norms[i]));
                row.push(format!("{:.16e}", c.harmonic_norms[i]));
                row.push(format!("{:.16e}", c.curl_norms[i]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `sqrt(x^T W x)`.
pub fn weighted_norm(x: &DVector<f64>, w: &DVector<f64>) -> f64 {
    x.iter().zip(w.iter()).map(|(a, b)| a * a * b).sum::<f64>().sqrt()
}

/// Precomputed spectral data for evaluating one flow at arbitrary times.
#[derive(Clone, Debug)]
pub struct FlowPropagator {
    order: usize,
    spec: SpectralData,
    sqrt_w: DVector<f64>,
    weights: DVector<f64>,
}

impl FlowPropagator {
    pub fn new(lap: &HodgeLaplacian) -> Result<Self> {
        let spec = spectrum(lap)?;
        let weights = lap.own_weights();
        Ok(FlowPropagator { order: lap.order(), spec, sqrt_w: weights.map(f64::sqrt), weights })
    }

    pub fn spectral_data(&self) -> &SpectralData {
        &self.spec
    }

    pub fn lambda_min_nonzero(&self) -> Result<f64> {
        lambda_min_nonzero_from(&self.spec)
    }

    fn chain_to_modal(&self, x: &DVector<f64>) -> DVector<f64> {
        self.spec.symmetric_eigenvectors.tr_mul(&x.component_mul(&self.sqrt_w))
    }

    fn modal_to_chain(&self, c: &DVector<f64>) -> DVector<f64> {
        (&self.spec.symmetric_eigenvectors * c).component_div(&self.sqrt_w)
    }

    /// `x(t)` from `x0`.
    pub fn evolve(&self, x0: &DVector<f64>, t: f64) -> DVector<f64> {
        let modal = self.chain_to_modal(x0);
        let decayed = DVector::from_iterator(
            modal.len(),
            modal.iter().zip(self.spec.eigenvalues.iter()).map(|(c, &l)| {
                // Eigenvalues below the zero threshold are harmonic modes.
                let l = if l < self.spec.zero_tol { 0.0 } else { l };
                c * (-l * t).exp()
            }),
        );
        self.modal_to_chain(&decayed)
    }

    /// `W_k`-orthogonal projection onto `ker L_k`.
    pub fn harmonic_projection(&self, x0: &DVector<f64>) -> DVector<f64> {
        let mut modal = self.chain_to_modal(x0);
        for (c, &l) in modal.iter_mut().zip(self.spec.eigenvalues.iter()) {
            if l >= self.spec.zero_tol {
                *c = 0.0;
            }
        }
        self.modal_to_chain(&modal)
    }

    pub fn simulate(&self, x0: &DVector<f64>, times: &[f64]) -> Result<FlowTrajectory> {
        validate_times(times)?;
        if x0.len() != self.sqrt_w.len() {
            return Err(Error::DimensionMismatch {
                what: "initial condition length",
                expected: self.sqrt_w.len(),
                got: x0.len(),
            });
        }
        if !all_finite(x0.iter()) {
            return Err(Error::NonFinite("initial condition"));
        }
        let n = x0.len();
        let mut states = DMatrix::zeros(times.len(), n);
        states.set_row(0, &x0.transpose());
        for (i, &t) in times.iter().enumerate().skip(1) {
            states.set_row(i, &self.evolve(x0, t).transpose());
        }
        Ok(FlowTrajectory {
            order: self.order,
            times: times.to_vec(),
            states,
            harmonic_limit: self.harmonic_projection(x0),
            weights: self.weights.clone(),
        })
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::Parse("time grid is empty".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::Parse(format!("time grid must start at 0, got {t0}")));
        }
        _ => {}
    }
    if !all_finite(times.iter()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parse("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Solves the flow from `x0` and samples it at `times` (which must start at 0).
pub fn simulate_flow(lap: &HodgeLaplacian, x0: &ChainSignal, times: &[f64]) -> Result<FlowTrajectory> {
    if x0.order != lap.order() {
        return Err(Error::DimensionMismatch { what: "initial condition order", expected: lap.order(), got: x0.order });
    }
    FlowPropagator::new(lap)?.simulate(&x0.values, times)
}

/// `samples` times: `0` followed by log-spaced points over three decades up to `t_max`.
pub fn default_time_grid(t_max: f64, samples: usize) -> Vec<f64> {
    assert!(samples >= 2 && t_max > 0.0);
    let mut times = vec![0.0];
    let rest = samples - 1;
    for i in 0..rest {
        let frac = if rest == 1 { 1.0 } else { i as f64 / (rest - 1) as f64 };
        times.push(t_max * 10f64.powf(-3.0 + 3.0 * frac));
    }
    times
}

/// Hodge components of a flow at each sample time.
#[derive(Clone, Debug)]
pub struct ComponentTrace {
    pub times: Vec<f64>,
    /// Rows are samples.
    pub gradient: DMatrix<f64>,
    pub harmonic: DMatrix<f64>,
    pub curl: DMatrix<f64>,
    /// `W_k`-norms of the rows above.
    pub gradient_norms: Vec<f64>,
    pub harmonic_norms: Vec<f64>,
    pub curl_norms: Vec<f64>,
}

/// Simulates the flow and decomposes the state at every sample.
pub fn flow_decomposition_trace(
    complex: &SimplicialComplex,
    weights: &WeightAssignment,
    x0: &ChainSignal,
    times: &[f64],
) -> Result<(FlowTrajectory, ComponentTrace)> {
    let lap = HodgeLaplacian::assemble(complex, weights, x0.order)?;
    let traj = simulate_flow(&lap, x0, times)?;
    let decomposer = HodgeDecomposer::new(complex, weights, x0.order, DecompositionMethod::NormalEquations)?;
    let trace = decompose_trajectory(&decomposer, &traj)?;
    Ok((traj, trace))
}

pub fn decompose_trajectory(decomposer: &HodgeDecomposer, traj: &FlowTrajectory) -> Result<ComponentTrace> {
    let (rows, cols) = traj.states.shape();
    let mut trace = ComponentTrace {
        times: traj.times.clone(),
        gradient: DMatrix::zeros(rows, cols),
        harmonic: DMatrix::zeros(rows, cols),
        curl: DMatrix::zeros(rows, cols),
        gradient_norms: Vec::with_capacity(rows),
        harmonic_norms: Vec::with_capacity(rows),
        curl_norms: Vec::with_capacity(rows),
    };
    for i in 0..rows {
        let parts = decomposer.decompose_values(&traj.state(i))?;
        trace.gradient_norms.push(weighted_norm(&parts.gradient, &traj.weights));
        trace.harmonic_norms.push(weighted_norm(&parts.harmonic, &traj.weights));
        trace.curl_norms.push(weighted_norm(&parts.curl, &traj.weights));
        trace.gradient.set_row(i, &parts.gradient.transpose());
        trace.harmonic.set_row(i, &parts.harmonic.transpose());
        trace.curl.set_row(i, &parts.curl.transpose());
    }
    Ok(trace)
}
