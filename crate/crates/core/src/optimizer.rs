//! Globally optimal simplex weights through semidefinite programming.
//!
//! With `w_k` fixed to one, the Laplacian
//!
//! ```text
//! L_k(u, w) = B_k^T diag(u) B_k + B_{k+1} diag(w) B_{k+1}^T
//! ```
//!
//! is linear in the reciprocal lower weights `u = 1 / w_{k-1}` and in the
//! upper weights `w = w_{k+1}`. Both spectral objectives are then convex
//! (`tr L_k^+`) or concave (`lambda_min_nonzero`) in `(u, w)`. Each optimized
//! vector is normalized to sum to one.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::laplacian::{HodgeLaplacian, WeightAssignment, WEIGHT_FLOOR};
use crate::sdp::{
    solve_sdp, Coefficient, ConeBlock, DecisionGroup, LinearEquality, MatrixVariable, SdpProblem, Sense, SolveStatus,
    SolverCertificate, SolverOptions, Term,
};
use crate::spectral::{kernel_basis, lambda_min_nonzero_from, spectrum, trace_pseudoinverse_from, KernelBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Minimize `tr L_k^+`.
    TracePinv,
    /// Maximize the smallest non-zero eigenvalue of `L_k`.
    LambdaMin,
}

impl Objective {
    pub fn sense(self) -> Sense {
        match self {
            Objective::TracePinv => Sense::Minimize,
            Objective::LambdaMin => Sense::Maximize,
        }
    }
}

/// Which neighbouring weight vectors of order `k` are decision variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WeightSelection {
    pub lower: bool,
    pub upper: bool,
}

impl WeightSelection {
    pub const UPPER: WeightSelection = WeightSelection { lower: false, upper: true };
    pub const LOWER: WeightSelection = WeightSelection { lower: true, upper: false };
    pub const BOTH: WeightSelection = WeightSelection { lower: true, upper: true };
}

fn check_selection(complex: &SimplicialComplex, k: usize, sel: WeightSelection) -> Result<()> {
    let top = complex.dimension();
    if k > top {
        return Err(Error::OrderOutOfRange { order: k, min: 0, max: top });
    }
    if !sel.lower && !sel.upper {
        return Err(Error::InvalidProblem("select lower and/or upper weights to optimize".into()));
    }
    if sel.lower && (k == 0 || complex.count(k - 1) == 0) {
        return Err(Error::InvalidProblem(format!("no lower weights to optimize at order {k}")));
    }
    if sel.upper && (k == top || complex.count(k + 1) == 0) {
        return Err(Error::InvalidProblem("no upper weights to optimize".into()));
    }
    if complex.count(k) == 0 {
        return Err(Error::InvalidProblem(format!("complex has no simplices of order {k}")));
    }
    Ok(())
}

/// `L_k(u, w)`; `None` stands for the all-ones vector.
pub fn parametrized_laplacian(
    complex: &SimplicialComplex,
    k: usize,
    lower_reciprocals: Option<&DVector<f64>>,
    upper: Option<&DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let top = complex.dimension();
    if k > top {
        return Err(Error::OrderOutOfRange { order: k, min: 0, max: top });
    }
    let n = complex.count(k);
    let mut lap = DMatrix::zeros(n, n);
    if k >= 1 {
        let b = complex.boundary_or_zero(k).to_dense();
        let u = lower_reciprocals.cloned().unwrap_or_else(|| DVector::from_element(b.nrows(), 1.0));
        if u.len() != b.nrows() {
            return Err(Error::DimensionMismatch { what: "lower weights", expected: b.nrows(), got: u.len() });
        }
        lap += b.transpose() * DMatrix::from_diagonal(&u) * &b;
    }
    if k < top {
        let b = complex.boundary_or_zero(k + 1).to_dense();
        let w = upper.cloned().unwrap_or_else(|| DVector::from_element(b.ncols(), 1.0));
        if w.len() != b.ncols() {
            return Err(Error::DimensionMismatch { what: "upper weights", expected: b.ncols(), got: w.len() });
        }
        lap += &b * DMatrix::from_diagonal(&w) * b.transpose();
    }
    Ok(lap)
}

/// Block, rank-one coefficients and fixed part shared by both programs.
struct Parts {
    n: usize,
    kernel: KernelBasis,
    fixed: DMatrix<f64>,
    lower: Vec<DVector<f64>>,
    upper: Vec<DVector<f64>>,
}

fn parts(complex: &SimplicialComplex, k: usize, sel: WeightSelection) -> Result<Parts> {
    check_selection(complex, k, sel)?;
    let n = complex.count(k);
    let top = complex.dimension();
    let mut fixed = DMatrix::zeros(n, n);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    if k >= 1 {
        let b = complex.boundary_or_zero(k).to_dense();
        if sel.lower {
            lower = b.row_iter().map(|r| r.transpose()).collect();
        } else {
            fixed += b.transpose() * &b;
        }
    }
    if k < top {
        let b = complex.boundary_or_zero(k + 1).to_dense();
        if sel.upper {
            upper = b.column_iter().map(|c| c.into_owned()).collect();
        } else {
            fixed += &b * b.transpose();
        }
    }
    Ok(Parts { n, kernel: kernel_basis(complex, k)?, fixed, lower, upper })
}

fn pad(v: &DVector<f64>, len: usize) -> DVector<f64> {
    let mut out = DVector::zeros(len);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// Adds the weight scalars, their non-negativity rows and normalizations.
fn add_weight_variables(problem: &mut SdpProblem, parts: &Parts, psd: usize, lp: usize, block_len: usize) {
    let mut row = 0;
    for (name, vectors) in [("lower", &parts.lower), ("upper", &parts.upper)] {
        if vectors.is_empty() {
            continue;
        }
        let start = problem.num_scalars();
        for (j, v) in vectors.iter().enumerate() {
            problem.add_scalar(
                format!("{name}[{j}]"),
                0.0,
                vec![
                    Term { block: psd, coefficient: Coefficient::rank_one(pad(v, block_len), 1.0) },
                    Term { block: lp, coefficient: Coefficient::Entries(vec![(row, 1.0)]) },
                ],
            );
            row += 1;
        }
        let range = start..problem.num_scalars();
        problem.equalities.push(LinearEquality { coefficients: range.clone().map(|i| (i, 1.0)).collect(), rhs: 1.0 });
        problem.groups.push(DecisionGroup { name: name.into(), range });
    }
}

fn weight_count(parts: &Parts) -> usize {
    parts.lower.len() + parts.upper.len()
}

/// The trace program: minimize `tr Y` subject to
/// `[[L_k(u, w) + K K^T, I], [I, Y]] >= 0`, `u, w >= 0`, `1^T u = 1^T w = 1`.
///
/// At the optimum `tr Y = tr L_k^+ + betti_k`.
pub fn build_trace_sdp(complex: &SimplicialComplex, k: usize, sel: WeightSelection) -> Result<SdpProblem> {
    let p = parts(complex, k, sel)?;
    let n = p.n;
    let mut constant = DMatrix::zeros(2 * n, 2 * n);
    constant.view_mut((0, 0), (n, n)).copy_from(&(&p.fixed + p.kernel.projector()));
    constant.view_mut((0, n), (n, n)).fill_with_identity();
    constant.view_mut((n, 0), (n, n)).fill_with_identity();

    let mut problem = SdpProblem::new(Sense::Minimize);
    let psd = problem.add_block(ConeBlock::Psd { constant });
    let lp = problem.add_block(ConeBlock::Nonneg { constant: DVector::zeros(weight_count(&p)) });
    add_weight_variables(&mut problem, &p, psd, lp, 2 * n);
    problem.matrices.push(MatrixVariable {
        name: "Y".into(),
        block: psd,
        offset: n,
        dim: n,
        cost: DMatrix::identity(n, n),
    });
    Ok(problem)
}

/// The eigenvalue program: maximize `gamma` subject to
/// `L_k(u, w) + beta K K^T - gamma I >= 0`, `u, w >= 0`, `1^T u = 1^T w = 1`.
///
/// The shift `beta` moves the harmonic eigenvalues out of the way. It is
/// bounded above by a constant exceeding every attainable eigenvalue, which
/// leaves the optimum unchanged and keeps the dual strictly feasible.
pub fn build_lambda_sdp(complex: &SimplicialComplex, k: usize, sel: WeightSelection) -> Result<SdpProblem> {
    let p = parts(complex, k, sel)?;
    let n = p.n;
    let has_kernel = p.kernel.betti > 0;
    let nw = weight_count(&p);

    let mut problem = SdpProblem::new(Sense::Maximize);
    let psd = problem.add_block(ConeBlock::Psd { constant: p.fixed.clone() });
    let mut lp_const = DVector::zeros(nw + usize::from(has_kernel));
    if has_kernel {
        let max_sq = |vs: &[DVector<f64>]| vs.iter().map(|v| v.norm_squared()).fold(0.0, f64::max);
        lp_const[nw] = p.fixed.norm() + max_sq(&p.lower) + max_sq(&p.upper) + 1.0;
    }
    let lp = problem.add_block(ConeBlock::Nonneg { constant: lp_const });
    add_weight_variables(&mut problem, &p, psd, lp, n);
    let gamma = problem.add_scalar(
        "gamma",
        1.0,
        vec![Term { block: psd, coefficient: Coefficient::Dense(-DMatrix::identity(n, n)) }],
    );
    problem.groups.push(DecisionGroup { name: "gamma".into(), range: gamma..gamma + 1 });
    if has_kernel {
        let beta = problem.add_scalar(
            "beta",
            0.0,
            vec![
                Term {
                    block: psd,
                    coefficient: Coefficient::LowRank {
                        vectors: p.kernel.basis.clone(),
                        scales: DVector::from_element(p.kernel.betti, 1.0),
                    },
                },
                Term { block: lp, coefficient: Coefficient::Entries(vec![(nw, -1.0)]) },
            ],
        );
        problem.groups.push(DecisionGroup { name: "beta".into(), range: beta..beta + 1 });
    }
    Ok(problem)
}

/// Weights of the normalized uniform point `u = 1/D_{k-1}`, `w = 1/D_{k+1}`
/// (all other orders one).
pub fn uniform_feasible_weights(
    complex: &SimplicialComplex,
    k: usize,
    sel: WeightSelection,
) -> Result<WeightAssignment> {
    check_selection(complex, k, sel)?;
    let mut per_order: Vec<DVector<f64>> = WeightAssignment::uniform(complex).orders().to_vec();
    if sel.lower {
        let d = complex.count(k - 1);
        per_order[k - 1] = DVector::from_element(d, d as f64);
    }
    if sel.upper {
        let d = complex.count(k + 1);
        per_order[k + 1] = DVector::from_element(d, 1.0 / d as f64);
    }
    WeightAssignment::new(complex, per_order)
}

/// `tr L_k^+` or `lambda_min_nonzero(L_k)` at the given weights.
pub fn evaluate_objective(
    complex: &SimplicialComplex,
    weights: &WeightAssignment,
    k: usize,
    objective: Objective,
) -> Result<f64> {
    let spec = spectrum(&HodgeLaplacian::assemble(complex, weights, k)?)?;
    match objective {
        Objective::TracePinv => Ok(trace_pseudoinverse_from(&spec)),
        Objective::LambdaMin => lambda_min_nonzero_from(&spec),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub solver: SolverOptions,
    /// Relative agreement required between the SDP value and direct recomputation.
    pub agreement_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { solver: SolverOptions::default(), agreement_tol: 1e-5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightOptimizationResult {
    pub objective: Objective,
    pub order: usize,
    pub selection: WeightSelection,
    /// Optimized `w_{k-1}` (the reciprocals of the normalized decision `u`).
    pub lower_weights: Option<Vec<f64>>,
    pub upper_weights: Option<Vec<f64>>,
    #[serde(skip)]
    pub weights: WeightAssignment,
    /// The SDP's estimate of the spectral objective (`tr Y - betti_k` or `gamma`).
    pub sdp_objective: f64,
    /// The spectral objective recomputed from the re-assembled Laplacian.
    pub direct_objective: f64,
    pub uniform_objective: f64,
    /// Percentage improvement over the uniform point; positive means better.
    pub improvement_percent: f64,
    pub relative_disagreement: f64,
    /// Whether `sdp_objective` and `direct_objective` agree within tolerance.
    pub accurate: bool,
    /// Entries raised to the weight floor after solving.
    pub clamped: usize,
    pub certificate: SolverCertificate,
}

impl WeightOptimizationResult {
    pub fn is_optimal(&self) -> bool {
        self.certificate.status == SolveStatus::Optimal && self.accurate
    }

    pub fn ensure_accurate(&self, tol: f64) -> Result<()> {
        if self.accurate {
            Ok(())
        } else {
            Err(Error::SolverAccuracy { sdp: self.sdp_objective, direct: self.direct_objective, tol })
        }
    }
}

/// Floors at [`WEIGHT_FLOOR`] and renormalizes to unit sum.
fn normalize(values: &[f64]) -> (Vec<f64>, usize) {
    let clamped = values.iter().filter(|&&v| v < WEIGHT_FLOOR).count();
    let floored: Vec<f64> = values.iter().map(|&v| v.max(WEIGHT_FLOOR)).collect();
    let sum: f64 = floored.iter().sum();
    (floored.iter().map(|v| v / sum).collect(), clamped)
}

/// Builds and solves the program for `objective`, then re-assembles and
/// re-evaluates the Laplacian at the returned weights.
pub fn optimize_weights(
    complex: &SimplicialComplex,
    k: usize,
    objective: Objective,
    sel: WeightSelection,
    options: &OptimizeOptions,
) -> Result<WeightOptimizationResult> {
    let problem = match objective {
        Objective::TracePinv => build_trace_sdp(complex, k, sel)?,
        Objective::LambdaMin => build_lambda_sdp(complex, k, sel)?,
    };
    let solution = solve_sdp(&problem, &options.solver)?;
    let mut per_order = WeightAssignment::uniform(complex).orders().to_vec();
    let mut clamped = 0;
    let mut lower_weights = None;
    let mut upper_weights = None;
    if let Some(range) = problem.group("lower") {
        let (u, c) = normalize(&solution.scalars.as_slice()[range]);
        clamped += c;
        let w: Vec<f64> = u.iter().map(|v| 1.0 / v).collect();
        per_order[k - 1] = DVector::from_vec(w.clone());
        lower_weights = Some(w);
    }
    if let Some(range) = problem.group("upper") {
        let (w, c) = normalize(&solution.scalars.as_slice()[range]);
        clamped += c;
        per_order[k + 1] = DVector::from_vec(w.clone());
        upper_weights = Some(w);
    }
    let weights = WeightAssignment::new(complex, per_order)?;
    let sdp_objective = match objective {
        Objective::TracePinv => solution.primal_objective - kernel_basis(complex, k)?.betti as f64,
        Objective::LambdaMin => solution.primal_objective,
    };
    let direct_objective = evaluate_objective(complex, &weights, k, objective)?;
    let uniform = uniform_feasible_weights(complex, k, sel)?;
    let uniform_objective = evaluate_objective(complex, &uniform, k, objective)?;
    let improvement_percent = match objective {
        Objective::TracePinv => (uniform_objective - direct_objective) / uniform_objective * 100.0,
        Objective::LambdaMin => (direct_objective - uniform_objective) / uniform_objective * 100.0,
    };
    let relative_disagreement =
        (sdp_objective - direct_objective).abs() / direct_objective.abs().max(f64::MIN_POSITIVE);
    let accurate = relative_disagreement <= options.agreement_tol;
    if !accurate {
        log::warn!(
            "SDP value {sdp_objective} and direct value {direct_objective} disagree (relative {relative_disagreement:e})"
        );
    }
    if clamped > 0 {
        log::info!("{clamped} optimized weights raised to the floor {WEIGHT_FLOOR:e}");
    }
    Ok(WeightOptimizationResult {
        objective,
        order: k,
        selection: sel,
        lower_weights,
        upper_weights,
        weights,
        sdp_objective,
        direct_objective,
        uniform_objective,
        improvement_percent,
        relative_disagreement,
        accurate,
        clamped,
        certificate: solution.certificate(),
    })
}
