//! Weighted Hodge decomposition of chain signals.
//!
//! A `k`-chain splits as
//!
//! ```text
//! s = B_k^T alpha  +  s_H  +  W_k^{-1} B_{k+1} W_{k+1} beta
//! ```
//!
//! with `s_H` in `ker L_k`. The gradient and curl parts are the
//! `W_k`-orthogonal projections of `s` onto `im B_k^T` and
//! `im W_k^{-1} B_{k+1}`; the potentials `alpha`, `beta` are the
//! minimum-norm solutions of the corresponding normal equations.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::laplacian::{weighted_inner_product, HodgeLaplacian, WeightAssignment};
use crate::linalg::{all_finite, pseudo_inverse, scale_cols, scale_rows};

/// Real values on the `k`-simplices of a complex.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSignal {
    pub order: usize,
    pub values: DVector<f64>,
}

impl ChainSignal {
    pub fn new(complex: &SimplicialComplex, order: usize, values: DVector<f64>) -> Result<Self> {
        if order > complex.dimension() {
            return Err(Error::OrderOutOfRange { order, min: 0, max: complex.dimension() });
        }
        if values.len() != complex.count(order) {
            return Err(Error::DimensionMismatch {
                what: "chain signal length",
                expected: complex.count(order),
                got: values.len(),
            });
        }
        Ok(ChainSignal { order, values })
    }

    /// Reads whitespace, comma or newline separated values.
    pub fn parse_values(text: &str) -> Result<DVector<f64>> {
        let values = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad signal value {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(values))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HodgeComponents {
    pub order: usize,
    /// `B_k^T alpha`.
    #[serde(serialize_with = "crate::io::serialize_vector")]
    pub gradient: DVector<f64>,
    #[serde(serialize_with = "crate::io::serialize_vector")]
    pub harmonic: DVector<f64>,
    /// `W_k^{-1} B_{k+1} W_{k+1} beta`.
    #[serde(serialize_with = "crate::io::serialize_vector")]
    pub curl: DVector<f64>,
    /// `alpha`, empty for `k = 0`.
    #[serde(serialize_with = "crate::io::serialize_vector")]
    pub lower_potential: DVector<f64>,
    /// `beta`, empty for `k = dimension`.
    #[serde(serialize_with = "crate::io::serialize_vector")]
    pub upper_potential: DVector<f64>,
}

/// How the potentials are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionMethod {
    /// `L^u_{k-1} alpha = W_{k-1}^{-1} B_k W_k s` and `L^d_{k+1} beta = B_{k+1}^T s`.
    NormalEquations,
    /// `min ||B_k^T alpha - s||_{W_k}` and `min ||W_k^{-1} B_{k+1} W_{k+1} beta - s||_{W_k}`.
    LeastSquares,
}

/// Precomputed linear maps for decomposing many signals on one weighted complex.
#[derive(Clone, Debug)]
pub struct HodgeDecomposer {
    order: usize,
    weights: DVector<f64>,
    alpha_op: DMatrix<f64>,
    gradient_lift: DMatrix<f64>,
    beta_op: DMatrix<f64>,
    curl_lift: DMatrix<f64>,
}

impl HodgeDecomposer {
    pub fn new(
        complex: &SimplicialComplex,
        weights: &WeightAssignment,
        order: usize,
        method: DecompositionMethod,
    ) -> Result<Self> {
        let top = complex.dimension();
        if order > top {
            return Err(Error::OrderOutOfRange { order, min: 0, max: top });
        }
        // Validates the weights against the complex.
        WeightAssignment::new(complex, weights.orders().to_vec())?;

        let n = complex.count(order);
        let wk = weights.order(order);
        let sqrt_wk = wk.map(f64::sqrt);
        let inv_wk = wk.map(|x| 1.0 / x);

        let (alpha_op, gradient_lift) = if order >= 1 {
            let b = complex.boundary_or_zero(order).to_dense();
            let bt = b.transpose();
            let op = match method {
                DecompositionMethod::NormalEquations => {
                    let inv_lower = weights.order(order - 1).map(|x| 1.0 / x);
                    // W_{k-1}^{-1} B_k W_k
                    let rhs_map = scale_cols(&scale_rows(&b, &inv_lower), &wk);
                    let up_lower = &rhs_map * &bt;
                    pseudo_inverse(&up_lower) * rhs_map
                }
                DecompositionMethod::LeastSquares => {
                    let a = scale_rows(&bt, &sqrt_wk);
                    scale_cols(&pseudo_inverse(&a), &sqrt_wk)
                }
            };
            (op, bt)
        } else {
            (DMatrix::zeros(0, n), DMatrix::zeros(n, 0))
        };

        let (beta_op, curl_lift) = if order < top {
            let b = complex.boundary_or_zero(order + 1).to_dense();
            let upper = weights.order(order + 1);
            let lift = scale_cols(&scale_rows(&b, &inv_wk), &upper);
            let op = match method {
                DecompositionMethod::NormalEquations => {
                    let bt = b.transpose();
                    let down_upper = &bt * &lift;
                    pseudo_inverse(&down_upper) * bt
                }
                DecompositionMethod::LeastSquares => {
                    let a = scale_rows(&lift, &sqrt_wk);
                    scale_cols(&pseudo_inverse(&a), &sqrt_wk)
                }
            };
            (op, lift)
        } else {
            (DMatrix::zeros(0, n), DMatrix::zeros(n, 0))
        };

        Ok(HodgeDecomposer { order, weights: wk, alpha_op, gradient_lift, beta_op, curl_lift })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn decompose_values(&self, values: &DVector<f64>) -> Result<HodgeComponents> {
        if values.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                what: "chain signal length",
                expected: self.weights.len(),
                got: values.len(),
            });
        }
        if !all_finite(values.iter()) {
            return Err(Error::NonFinite("chain signal"));
        }
        let alpha = &self.alpha_op * values;
        let beta = &self.beta_op * values;
        let gradient = &self.gradient_lift * &alpha;
        let curl = &self.curl_lift * &beta;
        let harmonic = values - &gradient - &curl;
        Ok(HodgeComponents {
            order: self.order,
            gradient,
            harmonic,
            curl,
            lower_potential: alpha,
            upper_potential: beta,
        })
    }

    pub fn decompose(&self, signal: &ChainSignal) -> Result<HodgeComponents> {
        if signal.order != self.order {
            return Err(Error::DimensionMismatch { what: "signal order", expected: self.order, got: signal.order });
        }
        self.decompose_values(&signal.values)
    }
}

/// Decomposes `signal` by the normal-equation route.
pub fn hodge_decompose(
    complex: &SimplicialComplex,
    weights: &WeightAssignment,
    signal: &ChainSignal,
) -> Result<HodgeComponents> {
    HodgeDecomposer::new(complex, weights, signal.order, DecompositionMethod::NormalEquations)?.decompose(signal)
}

/// Residuals certifying a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    /// `||gradient + harmonic + curl - s||`.
    pub reconstruction_residual: f64,
    /// Reconstruction residual divided by `max(||s||, tiny)`; zero for a zero signal.
    pub relative_reconstruction: f64,
    /// `||L_k s_H||`.
    pub harmonic_residual: f64,
    /// `||L_k s_H|| / (||L_k|| ||s||)`; zero for a zero signal.
    pub relative_harmonic_residual: f64,
    /// `|<gradient, harmonic>_{W_k}|`.
    pub gradient_harmonic: f64,
    /// `|<gradient, curl>_{W_k}|`.
    pub gradient_curl: f64,
    /// `|<harmonic, curl>_{W_k}|`.
    pub harmonic_curl: f64,
}

impl DecompositionReport {
    pub fn max_orthogonality(&self) -> f64 {
        self.gradient_harmonic.max(self.gradient_curl).max(self.harmonic_curl)
    }
}

pub fn verify_decomposition(
    components: &HodgeComponents,
    complex: &SimplicialComplex,
    weights: &WeightAssignment,
    signal: &ChainSignal,
) -> Result<DecompositionReport> {
    let lap = HodgeLaplacian::assemble(complex, weights, signal.order)?;
    let w = weights.order(signal.order);
    let sum = &components.gradient + &components.harmonic + &components.curl;
    let reconstruction_residual = (&sum - &signal.values).norm();
    let snorm = signal.values.norm();
    let relative_reconstruction = if snorm > 0.0 { reconstruction_residual / snorm } else { reconstruction_residual };
    let lh = lap.apply(&components.harmonic);
    let harmonic_residual = lh.norm();
    let denom = lap.full().norm() * snorm;
    let relative_harmonic_residual = if denom > 0.0 { harmonic_residual / denom } else { 0.0 };
    Ok(DecompositionReport {
        reconstruction_residual,
        relative_reconstruction,
        harmonic_residual,
        relative_harmonic_residual,
        gradient_harmonic: weighted_inner_product(&components.gradient, &components.harmonic, &w)?.abs(),
        gradient_curl: weighted_inner_product(&components.gradient, &components.curl, &w)?.abs(),
        harmonic_curl: weighted_inner_product(&components.harmonic, &components.curl, &w)?.abs(),
    })
}
