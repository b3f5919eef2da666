//! Primal–dual interior-point method for [`SdpProblem`]s.
//!
//! The problem is handled in the form
//!
//! ```text
//! minimize   c^T x + <C_Y, Y>
//! subject to S = F0 + F(x, Y) in K,   G x = h
//! ```
//!
//! with dual `Z in K`, `F*(Z) + G^T nu = (c, C_Y)`. Each iteration takes a
//! Mehrotra predictor–corrector step along the Nesterov–Todd direction.
//!
//! The NT Schur complement has entries `tr(F_i Gs F_j Gs)`, where `Gs` is the
//! inverse NT scaling matrix (`Gs S Gs = Z`). A free matrix variable `Y`
//! occupying the sub-block `P` of a PSD block contributes the operator
//! `dY -> Gs_PP dY Gs_PP`, which is inverted in closed form, so `Y` is
//! eliminated and the reduced system for the scalars reads
//!
//! ```text
//! M_ij = tr(F_i Gs F_j Gs) - tr(F_i H F_j H),    H = Gs P Gs_PP^{-1} P^T Gs.
//! ```
//!
//! The solver therefore never forms a system in the `dim(Y)^2` entries of `Y`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use super::problem::{Coefficient, ConeBlock, SdpProblem, Sense};
use crate::error::{Error, Result};
use crate::linalg::{frob_dot, sym_eigen, sym_min_eigenvalue};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative duality gap `|p - d| / max(1, |p|)` required for optimality.
    pub gap_tol: f64,
    /// Relative primal and dual infeasibility, and most negative cone eigenvalue, allowed at optimality.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { gap_tol: 1e-6, feas_tol: 1e-8, max_iter: 100, step_fraction: 0.98 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    /// Steps became too short or the scaling broke down before convergence.
    Stalled,
}

/// Solver output with its optimality certificate.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub scalars: DVector<f64>,
    pub matrices: Vec<DMatrix<f64>>,
    /// Objective of the returned decision, in the problem's sense.
    pub primal_objective: f64,
    /// Dual bound, in the problem's sense.
    pub dual_objective: f64,
    /// `|primal - dual|`.
    pub duality_gap: f64,
    /// `duality_gap / max(1, |primal|)`.
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// `min(0, smallest cone eigenvalue)` at the returned decision.
    pub psd_violation: f64,
    pub equality_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn certificate(&self) -> SolverCertificate {
        SolverCertificate {
            status: self.status,
            primal_objective: self.primal_objective,
            dual_objective: self.dual_objective,
            duality_gap: self.duality_gap,
            relative_gap: self.relative_gap,
            primal_infeasibility: self.primal_infeasibility,
            dual_infeasibility: self.dual_infeasibility,
            psd_violation: self.psd_violation,
            equality_residual: self.equality_residual,
            iterations: self.iterations,
        }
    }
}

/// Serializable summary of an [`SdpSolution`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverCertificate {
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub psd_violation: f64,
    pub equality_residual: f64,
    pub iterations: usize,
}

// ---------------------------------------------------------------------------
// Block-diagonal values

#[derive(Clone, Debug)]
enum Mat {
    Psd(DMatrix<f64>),
    Lp(DVector<f64>),
}

impl Mat {
    fn dot(&self, other: &Mat) -> f64 {
        match (self, other) {
            (Mat::Psd(a), Mat::Psd(b)) => frob_dot(a, b),
            (Mat::Lp(a), Mat::Lp(b)) => a.dot(b),
            _ => unreachable!("block kinds differ"),
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            Mat::Psd(a) => a.norm_squared(),
            Mat::Lp(a) => a.norm_squared(),
        }
    }

    fn axpy(&mut self, alpha: f64, x: &Mat) {
        match (self, x) {
            (Mat::Psd(a), Mat::Psd(b)) => a.zip_apply(b, |x, y| *x += alpha * y),
            (Mat::Lp(a), Mat::Lp(b)) => a.axpy(alpha, b, 1.0),
            _ => unreachable!("block kinds differ"),
        }
    }

    fn sub(&self, x: &Mat) -> Mat {
        let mut out = self.clone();
        out.axpy(-1.0, x);
        out
    }
}

fn dot_all(a: &[Mat], b: &[Mat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm_all(a: &[Mat]) -> f64 {
    a.iter().map(Mat::norm_sq).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Problem data rearranged for the iteration

struct PsdData {
    n: usize,
    constant: DMatrix<f64>,
    /// All low-rank vectors of the block, side by side.
    u: DMatrix<f64>,
    owner: Vec<usize>,
    scale: Vec<f64>,
    dense: Vec<(usize, DMatrix<f64>)>,
    /// Index of the matrix variable living in this block.
    mvar: Option<usize>,
}

struct LpData {
    n: usize,
    constant: DVector<f64>,
    /// Per row: `(variable, coefficient)`.
    rows: Vec<Vec<(usize, f64)>>,
}

enum BlockData {
    Psd(PsdData),
    Lp(LpData),
}

struct MatVar {
    offset: usize,
    dim: usize,
    cost: DMatrix<f64>,
}

struct Model {
    m: usize,
    blocks: Vec<BlockData>,
    cost: DVector<f64>,
    mats: Vec<MatVar>,
    eq: DMatrix<f64>,
    eq_rhs: DVector<f64>,
}

impl Model {
    fn new(problem: &SdpProblem) -> Self {
        let m = problem.scalars.len();
        let sign = match problem.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut blocks: Vec<BlockData> = problem
            .blocks
            .iter()
            .map(|b| match b {
                ConeBlock::Psd { constant } => BlockData::Psd(PsdData {
                    n: constant.nrows(),
                    constant: constant.clone(),
                    u: DMatrix::zeros(constant.nrows(), 0),
                    owner: Vec::new(),
                    scale: Vec::new(),
                    dense: Vec::new(),
                    mvar: None,
                }),
                ConeBlock::Nonneg { constant } => BlockData::Lp(LpData {
                    n: constant.len(),
                    constant: constant.clone(),
                    rows: vec![Vec::new(); constant.len()],
                }),
            })
            .collect();

        let mut lowrank_cols: Vec<Vec<DVector<f64>>> = vec![Vec::new(); blocks.len()];
        for (i, var) in problem.scalars.iter().enumerate() {
            for term in &var.terms {
                match (&mut blocks[term.block], &term.coefficient) {
                    (BlockData::Psd(d), Coefficient::Dense(f)) => d.dense.push((i, f.clone())),
                    (BlockData::Psd(d), Coefficient::LowRank { vectors, scales }) => {
                        for (r, col) in vectors.column_iter().enumerate() {
                            lowrank_cols[term.block].push(col.into_owned());
                            d.owner.push(i);
                            d.scale.push(scales[r]);
                        }
                    }
                    (BlockData::Lp(d), Coefficient::Entries(e)) => {
                        for &(row, v) in e {
                            d.rows[row].push((i, v));
                        }
                    }
                    _ => unreachable!("validated"),
                }
            }
        }
        for (b, cols) in lowrank_cols.into_iter().enumerate() {
            if let BlockData::Psd(d) = &mut blocks[b] {
                if !cols.is_empty() {
                    d.u = DMatrix::from_columns(&cols);
                }
            }
        }
        let mats = problem
            .matrices
            .iter()
            .enumerate()
            .map(|(j, y)| {
                if let BlockData::Psd(d) = &mut blocks[y.block] {
                    d.mvar = Some(j);
                }
                MatVar { offset: y.offset, dim: y.dim, cost: &y.cost * sign }
            })
            .collect();
        let p = problem.equalities.len();
        let mut eq = DMatrix::zeros(p, m);
        let mut eq_rhs = DVector::zeros(p);
        for (r, e) in problem.equalities.iter().enumerate() {
            for &(i, a) in &e.coefficients {
                eq[(r, i)] += a;
            }
            eq_rhs[r] = e.rhs;
        }
        Model {
            m,
            blocks,
            cost: DVector::from_iterator(m, problem.scalars.iter().map(|v| v.cost * sign)),
            mats,
            eq,
            eq_rhs,
        }
    }

    fn constants(&self) -> Vec<Mat> {
        self.blocks
            .iter()
            .map(|b| match b {
                BlockData::Psd(d) => Mat::Psd(d.constant.clone()),
                BlockData::Lp(d) => Mat::Lp(d.constant.clone()),
            })
            .collect()
    }

    /// Scalar part of `F(dx)` for one PSD block.
    fn apply_scalars_psd(d: &PsdData, dx: &DVector<f64>) -> DMatrix<f64> {
        let mut out = if d.u.ncols() > 0 {
            let mut scaled = d.u.clone();
            for (r, mut col) in scaled.column_iter_mut().enumerate() {
                col *= d.scale[r] * dx[d.owner[r]];
            }
            scaled * d.u.transpose()
        } else {
            DMatrix::zeros(d.n, d.n)
        };
        for (j, f) in &d.dense {
            let c = dx[*j];
            out.zip_apply(f, |x, y| *x += c * y);
        }
        out
    }

    /// `F(dx, dY)` without the constant.
    fn apply(&self, dx: &DVector<f64>, dys: &[DMatrix<f64>]) -> Vec<Mat> {
        self.blocks
            .iter()
            .map(|b| match b {
                BlockData::Psd(d) => {
                    let mut out = Self::apply_scalars_psd(d, dx);
                    if let Some(j) = d.mvar {
                        let mv = &self.mats[j];
                        let mut view = out.view_mut((mv.offset, mv.offset), (mv.dim, mv.dim));
                        view += &dys[j];
                    }
                    Mat::Psd(out)
                }
                BlockData::Lp(d) => Mat::Lp(DVector::from_iterator(
                    d.n,
                    d.rows.iter().map(|row| row.iter().map(|&(i, v)| v * dx[i]).sum::<f64>()),
                )),
            })
            .collect()
    }

    /// Scalar part of the adjoint `F*(Z)`.
    fn adjoint_scalars(&self, z: &[Mat]) -> DVector<f64> {
        let mut g = DVector::zeros(self.m);
        for (b, zb) in self.blocks.iter().zip(z) {
            match (b, zb) {
                (BlockData::Psd(d), Mat::Psd(zm)) => {
                    if d.u.ncols() > 0 {
                        let zu = zm * &d.u;
                        for r in 0..d.u.ncols() {
                            g[d.owner[r]] += d.scale[r] * d.u.column(r).dot(&zu.column(r));
                        }
                    }
                    for (j, f) in &d.dense {
                        g[*j] += frob_dot(f, zm);
                    }
                }
                (BlockData::Lp(d), Mat::Lp(zv)) => {
                    for (row, entries) in d.rows.iter().enumerate() {
                        for &(i, v) in entries {
                            g[i] += v * zv[row];
                        }
                    }
                }
                _ => unreachable!("block kinds differ"),
            }
        }
        g
    }

    /// Matrix-variable part of the adjoint: the sub-block of `Z` under each `Y`.
    fn adjoint_matrices(&self, z: &[Mat]) -> Vec<DMatrix<f64>> {
        let mut out = vec![DMatrix::zeros(0, 0); self.mats.len()];
        for (b, zb) in self.blocks.iter().zip(z) {
            if let (BlockData::Psd(d), Mat::Psd(zm)) = (b, zb) {
                if let Some(j) = d.mvar {
                    let mv = &self.mats[j];
                    out[j] = zm.view((mv.offset, mv.offset), (mv.dim, mv.dim)).into_owned();
                }
            }
        }
        out
    }

    fn total_dim(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b {
                BlockData::Psd(d) => d.n,
                BlockData::Lp(d) => d.n,
            })
            .sum()
    }
}

// ---------------------------------------------------------------------------
// NT scaling

#[allow(clippy::large_enum_variant)]
enum Scaling {
    Psd {
        /// `R` with `R^{-1} S R^{-T} = R^T Z R = diag(lambda)`.
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        /// `Gs = R^{-T} R^{-1}`, so that `Gs S Gs = Z`.
        g: DMatrix<f64>,
        lambda: DVector<f64>,
        /// Present when the block hosts a matrix variable.
        elim: Option<Elimination>,
    },
    Lp {
        /// `sqrt(z / s)`, the scalar `Gs`.
        g: DVector<f64>,
        lambda: DVector<f64>,
    },
}

struct Elimination {
    offset: usize,
    dim: usize,
    /// `Gs_PP^{-1}`.
    g22inv: DMatrix<f64>,
    /// `Gs P` (n x dim).
    gp: DMatrix<f64>,
    /// `H = Gs P Gs_PP^{-1} P^T Gs`.
    h: DMatrix<f64>,
}

fn scaling(block: &BlockData, mats: &[MatVar], s: &Mat, z: &Mat) -> Option<Scaling> {
    match (block, s, z) {
        (BlockData::Psd(d), Mat::Psd(sm), Mat::Psd(zm)) => {
            let n = d.n;
            let chol = Cholesky::new(sm.clone())?;
            let l = chol.l();
            let linv = l.solve_lower_triangular(&DMatrix::identity(n, n))?;
            let t = l.transpose() * zm * &l;
            let t = (&t + t.transpose()) * 0.5;
            let (omega, q) = sym_eigen(&t).ok()?;
            if omega.iter().any(|&w| w.is_nan() || w <= 0.0) {
                return None;
            }
            let lambda = omega.map(f64::sqrt);
            let mut r = &l * &q;
            for (j, mut col) in r.column_iter_mut().enumerate() {
                col /= lambda[j].sqrt();
            }
            let mut rinv = q.transpose() * linv;
            for (i, mut row) in rinv.row_iter_mut().enumerate() {
                row *= lambda[i].sqrt();
            }
            let g = rinv.transpose() * &rinv;
            let g = (&g + g.transpose()) * 0.5;
            let elim = match d.mvar {
                Some(j) => {
                    let mv = &mats[j];
                    let g22 = g.view((mv.offset, mv.offset), (mv.dim, mv.dim)).into_owned();
                    let g22inv = Cholesky::new(g22)?.inverse();
                    let gp = g.columns(mv.offset, mv.dim).into_owned();
                    let h = &gp * &g22inv * gp.transpose();
                    Some(Elimination { offset: mv.offset, dim: mv.dim, g22inv, gp, h })
                }
                None => None,
            };
            Some(Scaling::Psd { r, rinv, g, lambda, elim })
        }
        (BlockData::Lp(_), Mat::Lp(sv), Mat::Lp(zv)) => {
            if sv.iter().chain(zv.iter()).any(|&v| v.is_nan() || v <= 0.0) {
                return None;
            }
            Some(Scaling::Lp {
                g: zv.zip_map(sv, |z, s| (z / s).sqrt()),
                lambda: zv.zip_map(sv, |z, s| (z * s).sqrt()),
            })
        }
        _ => unreachable!("block kinds differ"),
    }
}

impl Scaling {
    fn lambda(&self) -> &DVector<f64> {
        match self {
            Scaling::Psd { lambda, .. } | Scaling::Lp { lambda, .. } => lambda,
        }
    }

    /// `Gs X Gs`.
    fn sandwich(&self, x: &Mat) -> Mat {
        match (self, x) {
            (Scaling::Psd { g, .. }, Mat::Psd(xm)) => Mat::Psd(g * xm * g),
            (Scaling::Lp { g, .. }, Mat::Lp(xv)) => Mat::Lp(xv.zip_map(g, |x, g| x * g * g)),
            _ => unreachable!("block kinds differ"),
        }
    }

    /// `R^{-T} X R^{-1}` for `X` in scaled coordinates.
    fn unscale_dual(&self, x: &Mat) -> Mat {
        match (self, x) {
            (Scaling::Psd { rinv, .. }, Mat::Psd(xm)) => Mat::Psd(rinv.transpose() * xm * rinv),
            (Scaling::Lp { g, .. }, Mat::Lp(xv)) => Mat::Lp(xv.component_mul(g)),
            _ => unreachable!("block kinds differ"),
        }
    }

    /// `R^{-1} dS R^{-T}`.
    fn scale_primal(&self, ds: &Mat) -> Mat {
        match (self, ds) {
            (Scaling::Psd { rinv, .. }, Mat::Psd(m)) => Mat::Psd(rinv * m * rinv.transpose()),
            (Scaling::Lp { g, .. }, Mat::Lp(v)) => Mat::Lp(v.component_mul(g)),
            _ => unreachable!("block kinds differ"),
        }
    }

    /// `R^T dZ R`.
    fn scale_dual(&self, dz: &Mat) -> Mat {
        match (self, dz) {
            (Scaling::Psd { r, .. }, Mat::Psd(m)) => Mat::Psd(r.transpose() * m * r),
            (Scaling::Lp { g, .. }, Mat::Lp(v)) => Mat::Lp(v.component_div(g)),
            _ => unreachable!("block kinds differ"),
        }
    }

    /// Solves `Lambda o X = rhs` for `X`, with `o` the symmetrized product.
    fn lyapunov_solve(&self, rhs: &Mat) -> Mat {
        let lam = self.lambda();
        match rhs {
            Mat::Psd(h) => {
                let n = h.nrows();
                Mat::Psd(DMatrix::from_fn(n, n, |i, j| 2.0 * h[(i, j)] / (lam[i] + lam[j])))
            }
            Mat::Lp(h) => Mat::Lp(h.component_div(lam)),
        }
    }

    /// Largest `alpha` with `Lambda + alpha * d` in the cone (`d` in scaled coordinates).
    fn max_step(&self, d: &Mat) -> Result<f64> {
        let lam = self.lambda();
        let min = match d {
            Mat::Psd(m) => {
                let n = m.nrows();
                let t = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]) / (lam[i] * lam[j]).sqrt());
                sym_min_eigenvalue(&t)?
            }
            Mat::Lp(v) => v.iter().zip(lam.iter()).map(|(d, l)| d / l).fold(f64::INFINITY, f64::min),
        };
        Ok(if min < 0.0 { -1.0 / min } else { f64::INFINITY })
    }
}

// ---------------------------------------------------------------------------
// Iteration

struct Iterate {
    x: DVector<f64>,
    ys: Vec<DMatrix<f64>>,
    nu: DVector<f64>,
    s: Vec<Mat>,
    z: Vec<Mat>,
}

struct Residuals {
    rp: Vec<Mat>,
    rd: DVector<f64>,
    rd_y: Vec<DMatrix<f64>>,
    rg: DVector<f64>,
    pobj: f64,
    dobj: f64,
    compl: f64,
    pinf: f64,
    dinf: f64,
}

struct Direction {
    dx: DVector<f64>,
    dys: Vec<DMatrix<f64>>,
    dnu: DVector<f64>,
    ds: Vec<Mat>,
    dz: Vec<Mat>,
}

struct Normalizers {
    primal: f64,
    dual: f64,
}

fn residuals(model: &Model, it: &Iterate, norms: &Normalizers) -> Residuals {
    let fx = model.apply(&it.x, &it.ys);
    let consts = model.constants();
    let rp: Vec<Mat> = consts
        .iter()
        .zip(&fx)
        .zip(&it.s)
        .map(|((c, f), s)| {
            let mut r = c.clone();
            r.axpy(1.0, f);
            r.axpy(-1.0, s);
            r
        })
        .collect();
    let rd = &model.cost - model.adjoint_scalars(&it.z) - model.eq.transpose() * &it.nu;
    let zy = model.adjoint_matrices(&it.z);
    let rd_y: Vec<DMatrix<f64>> = model.mats.iter().zip(&zy).map(|(mv, z)| &mv.cost - z).collect();
    let rg = &model.eq_rhs - &model.eq * &it.x;
    let pobj = model.cost.dot(&it.x) + model.mats.iter().zip(&it.ys).map(|(mv, y)| frob_dot(&mv.cost, y)).sum::<f64>();
    let dobj = -dot_all(&consts, &it.z) + model.eq_rhs.dot(&it.nu);
    let compl = dot_all(&it.s, &it.z);
    let pinf = (norm_all(&rp).powi(2) + rg.norm_squared()).sqrt() / norms.primal;
    let dinf = (rd.norm_squared() + rd_y.iter().map(|m| m.norm_squared()).sum::<f64>()).sqrt() / norms.dual;
    Residuals { rp, rd, rd_y, rg, pobj, dobj, compl, pinf, dinf }
}

/// Reduced Schur complement for the scalar variables.
fn schur_complement(model: &Model, scales: &[Scaling]) -> DMatrix<f64> {
    let m = model.m;
    let mut big = DMatrix::zeros(m, m);
    for (block, sc) in model.blocks.iter().zip(scales) {
        match (block, sc) {
            (BlockData::Psd(d), Scaling::Psd { g, elim, .. }) => {
                let h = elim.as_ref().map(|e| &e.h);
                let rr = d.u.ncols();
                if rr > 0 {
                    let a = d.u.transpose() * (g * &d.u);
                    let b = h.map(|h| d.u.transpose() * (h * &d.u));
                    for q in 0..rr {
                        for p in 0..rr {
                            let mut v = a[(p, q)] * a[(p, q)];
                            if let Some(b) = &b {
                                v -= b[(p, q)] * b[(p, q)];
                            }
                            big[(d.owner[p], d.owner[q])] += d.scale[p] * d.scale[q] * v;
                        }
                    }
                }
                for (j, fj) in &d.dense {
                    let mut t = g * fj * g;
                    if let Some(h) = h {
                        t -= h * fj * h;
                    }
                    for (i, fi) in &d.dense {
                        big[(*i, *j)] += frob_dot(fi, &t);
                    }
                    if rr > 0 {
                        let tu = &t * &d.u;
                        for p in 0..rr {
                            let v = d.scale[p] * d.u.column(p).dot(&tu.column(p));
                            big[(d.owner[p], *j)] += v;
                            big[(*j, d.owner[p])] += v;
                        }
                    }
                }
            }
            (BlockData::Lp(d), Scaling::Lp { g, .. }) => {
                for (row, entries) in d.rows.iter().enumerate() {
                    let gg = g[row] * g[row];
                    for &(i, a) in entries {
                        for &(j, b) in entries {
                            big[(i, j)] += a * b * gg;
                        }
                    }
                }
            }
            _ => unreachable!("block kinds differ"),
        }
    }
    (&big + big.transpose()) * 0.5
}

struct Factor {
    chol: Cholesky<f64, Dyn>,
    /// `M^{-1} G^T` and the Cholesky factor of `G M^{-1} G^T`.
    eq: Option<(DMatrix<f64>, Cholesky<f64, Dyn>)>,
}

fn factor(model: &Model, schur: DMatrix<f64>) -> Result<Factor> {
    let m = schur.nrows();
    let mut shift = 0.0;
    let diag_max = schur.diagonal().amax().max(f64::MIN_POSITIVE);
    let chol = loop {
        let mut trial = schur.clone();
        for i in 0..m {
            trial[(i, i)] += shift;
        }
        if let Some(c) = Cholesky::new(trial) {
            break c;
        }
        shift = if shift == 0.0 { 1e-14 * diag_max } else { shift * 100.0 };
        if shift > 1e-6 * diag_max {
            return Err(Error::Numerical("Schur complement is not positive definite".into()));
        }
    };
    let eq = if model.eq.nrows() > 0 {
        let minv_gt = chol.solve(&model.eq.transpose());
        let small = &model.eq * &minv_gt;
        let small = (&small + small.transpose()) * 0.5;
        let c = Cholesky::new(small)
            .ok_or_else(|| Error::Numerical("equality constraints are linearly dependent".into()))?;
        Some((minv_gt, c))
    } else {
        None
    };
    Ok(Factor { chol, eq })
}

/// Computes the search direction for the complementarity target `rhat`
/// (given in scaled coordinates, one per block).
fn direction(model: &Model, scales: &[Scaling], fac: &Factor, res: &Residuals, rhat: &[Mat]) -> Direction {
    // Phi = R^{-T} Rhat R^{-1} - Gs Rp Gs, so that dZ = Phi - Gs F(dx, dY) Gs.
    let phi: Vec<Mat> =
        scales.iter().zip(rhat).zip(&res.rp).map(|((sc, rh), rp)| sc.unscale_dual(rh).sub(&sc.sandwich(rp))).collect();

    // Eliminate the matrix variables.
    let mut r_y = vec![DMatrix::zeros(0, 0); model.mats.len()];
    let mut phi_minus_psi = phi.clone();
    for ((block, sc), pm) in model.blocks.iter().zip(scales).zip(phi_minus_psi.iter_mut()) {
        if let (BlockData::Psd(d), Scaling::Psd { elim: Some(e), .. }, Mat::Psd(pmat)) = (block, sc, pm) {
            let j = d.mvar.expect("elimination implies a matrix variable");
            let ry = pmat.view((e.offset, e.offset), (e.dim, e.dim)).into_owned() - &res.rd_y[j];
            let inner = &e.g22inv * &ry * &e.g22inv;
            *pmat -= &e.gp * inner * e.gp.transpose();
            r_y[j] = ry;
        }
    }
    let rhs = model.adjoint_scalars(&phi_minus_psi) - &res.rd;

    // Saddle system [M, -G^T; G, 0] [dx; dnu] = [rhs; rg].
    let minv_rhs = fac.chol.solve(&rhs);
    let (dx, dnu) = match &fac.eq {
        Some((minv_gt, small)) => {
            let dnu = small.solve(&(&res.rg - &model.eq * &minv_rhs));
            (minv_rhs + minv_gt * &dnu, dnu)
        }
        None => (minv_rhs, DVector::zeros(0)),
    };

    // Recover dY = Gs_PP^{-1} (r_Y - P^T Gs F(dx) Gs P) Gs_PP^{-1}.
    let mut dys = vec![DMatrix::zeros(0, 0); model.mats.len()];
    for (block, sc) in model.blocks.iter().zip(scales) {
        if let (BlockData::Psd(d), Scaling::Psd { elim: Some(e), .. }) = (block, sc) {
            let j = d.mvar.expect("elimination implies a matrix variable");
            let f = Model::apply_scalars_psd(d, &dx);
            let coupled = e.gp.transpose() * f * &e.gp;
            let dy = &e.g22inv * (&r_y[j] - coupled) * &e.g22inv;
            dys[j] = (&dy + dy.transpose()) * 0.5;
        }
    }

    let fd = model.apply(&dx, &dys);
    let ds: Vec<Mat> = fd
        .iter()
        .zip(&res.rp)
        .map(|(f, rp)| {
            let mut v = f.clone();
            v.axpy(1.0, rp);
            v
        })
        .collect();
    let dz: Vec<Mat> = phi
        .iter()
        .zip(scales)
        .zip(&fd)
        .map(|((p, sc), f)| {
            let v = p.sub(&sc.sandwich(f));
            match v {
                Mat::Psd(m) => Mat::Psd((&m + m.transpose()) * 0.5),
                lp => lp,
            }
        })
        .collect();
    Direction { dx, dys, dnu, ds, dz }
}

fn step_lengths(scales: &[Scaling], dir: &Direction) -> Result<(f64, f64)> {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for ((sc, ds), dz) in scales.iter().zip(&dir.ds).zip(&dir.dz) {
        ap = ap.min(sc.max_step(&sc.scale_primal(ds))?);
        ad = ad.min(sc.max_step(&sc.scale_dual(dz))?);
    }
    Ok((ap, ad))
}

fn initial_iterate(model: &Model, problem: &SdpProblem) -> Iterate {
    let mut s = Vec::new();
    let mut z = Vec::new();
    for (b, block) in model.blocks.iter().enumerate() {
        let n = match block {
            BlockData::Psd(d) => d.n,
            BlockData::Lp(d) => d.n,
        } as f64;
        let mut coef_norm_max: f64 = 0.0;
        let mut ratio_max: f64 = 0.0;
        for var in &problem.scalars {
            for t in var.terms.iter().filter(|t| t.block == b) {
                let nrm = t.coefficient.to_dense(n as usize).norm();
                coef_norm_max = coef_norm_max.max(nrm);
                ratio_max = ratio_max.max((1.0 + var.cost.abs()) / (1.0 + nrm));
            }
        }
        for y in problem.matrices.iter().filter(|y| y.block == b) {
            let nrm = (y.dim as f64).sqrt();
            coef_norm_max = coef_norm_max.max(nrm);
            ratio_max = ratio_max.max((1.0 + y.cost.norm()) / (1.0 + nrm));
        }
        let const_norm = match block {
            BlockData::Psd(d) => d.constant.norm(),
            BlockData::Lp(d) => d.constant.norm(),
        };
        let zeta = 10f64.max(n.sqrt()).max(n * ratio_max);
        let eta = 10f64.max(n.sqrt()).max(coef_norm_max).max(const_norm);
        match block {
            BlockData::Psd(d) => {
                s.push(Mat::Psd(DMatrix::identity(d.n, d.n) * eta));
                z.push(Mat::Psd(DMatrix::identity(d.n, d.n) * zeta));
            }
            BlockData::Lp(d) => {
                s.push(Mat::Lp(DVector::from_element(d.n, eta)));
                z.push(Mat::Lp(DVector::from_element(d.n, zeta)));
            }
        }
    }
    Iterate {
        x: DVector::zeros(model.m),
        ys: model.mats.iter().map(|mv| DMatrix::zeros(mv.dim, mv.dim)).collect(),
        nu: DVector::zeros(model.eq.nrows()),
        s,
        z,
    }
}

fn take_step(it: &mut Iterate, dir: &Direction, ap: f64, ad: f64) {
    it.x.axpy(ap, &dir.dx, 1.0);
    for (y, dy) in it.ys.iter_mut().zip(&dir.dys) {
        y.zip_apply(dy, |a, b| *a += ap * b);
    }
    for (s, ds) in it.s.iter_mut().zip(&dir.ds) {
        s.axpy(ap, ds);
    }
    it.nu.axpy(ad, &dir.dnu, 1.0);
    for (z, dz) in it.z.iter_mut().zip(&dir.dz) {
        z.axpy(ad, dz);
    }
}

/// Symmetrized product `(a b + b a) / 2`.
fn jordan(a: &Mat, b: &Mat) -> Mat {
    match (a, b) {
        (Mat::Psd(x), Mat::Psd(y)) => {
            let p = x * y;
            Mat::Psd((&p + p.transpose()) * 0.5)
        }
        (Mat::Lp(x), Mat::Lp(y)) => Mat::Lp(x.component_mul(y)),
        _ => unreachable!("block kinds differ"),
    }
}

fn complementarity_target(sc: &Scaling, sigma_mu: f64, second_order: Option<&Mat>) -> Mat {
    let lam = sc.lambda();
    let mut h = match sc {
        Scaling::Psd { .. } => {
            let n = lam.len();
            Mat::Psd(DMatrix::from_fn(n, n, |i, j| if i == j { sigma_mu - lam[i] * lam[i] } else { 0.0 }))
        }
        Scaling::Lp { .. } => Mat::Lp(lam.map(|l| sigma_mu - l * l)),
    };
    if let Some(c) = second_order {
        h.axpy(-1.0, c);
    }
    sc.lyapunov_solve(&h)
}

/// Solves `problem` with a Mehrotra predictor–corrector interior-point method.
///
/// Deterministic for identical inputs and options.
pub fn solve_sdp(problem: &SdpProblem, options: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let model = Model::new(problem);
    let nu_total = model.total_dim() as f64;
    let norms = Normalizers {
        primal: 1.0 + norm_all(&model.constants()) + model.eq_rhs.norm(),
        dual: 1.0 + model.cost.norm() + model.mats.iter().map(|mv| mv.cost.norm_squared()).sum::<f64>().sqrt(),
    };
    let mut it = initial_iterate(&model, problem);
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    loop {
        let res = residuals(&model, &it, &norms);
        let scale = 1f64.max(res.pobj.abs());
        let gap = (res.pobj - res.dobj).abs();
        log::debug!(
            "iter {iterations:3}: pobj {:.10e} dobj {:.10e} gap {:.2e} pinf {:.2e} dinf {:.2e}",
            res.pobj,
            res.dobj,
            gap,
            res.pinf,
            res.dinf
        );
        if gap <= options.gap_tol * scale
            && res.compl <= options.gap_tol * scale
            && res.pinf <= options.feas_tol
            && res.dinf <= options.feas_tol
        {
            // The slack tracks the cone only up to the primal residual; keep
            // iterating until the decision itself satisfies the cone.
            let min_eig = problem.min_cone_eigenvalue(&it.x, &it.ys)?;
            if min_eig >= -options.feas_tol {
                status = SolveStatus::Optimal;
                break;
            }
            log::debug!("tolerances met but cone violated by {min_eig:e}; continuing");
        }
        if iterations >= options.max_iter {
            break;
        }
        let scales: Option<Vec<Scaling>> =
            model.blocks.iter().zip(&it.s).zip(&it.z).map(|((b, s), z)| scaling(b, &model.mats, s, z)).collect();
        let Some(scales) = scales else {
            log::warn!("NT scaling broke down at iteration {iterations}");
            status = SolveStatus::Stalled;
            break;
        };
        let fac = match factor(&model, schur_complement(&model, &scales)) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("{e} at iteration {iterations}");
                status = SolveStatus::Stalled;
                break;
            }
        };
        let mu = res.compl / nu_total;

        // Predictor.
        let rhat: Vec<Mat> = scales.iter().map(|sc| complementarity_target(sc, 0.0, None)).collect();
        let pred = direction(&model, &scales, &fac, &res, &rhat);
        let (ap, ad) = step_lengths(&scales, &pred)?;
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut s_aff = it.s.clone();
        let mut z_aff = it.z.clone();
        for (s, ds) in s_aff.iter_mut().zip(&pred.ds) {
            s.axpy(ap, ds);
        }
        for (z, dz) in z_aff.iter_mut().zip(&pred.dz) {
            z.axpy(ad, dz);
        }
        let mu_aff = dot_all(&s_aff, &z_aff) / nu_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rhat: Vec<Mat> = scales
            .iter()
            .zip(&pred.ds)
            .zip(&pred.dz)
            .map(|((sc, ds), dz)| {
                let second = jordan(&sc.scale_primal(ds), &sc.scale_dual(dz));
                complementarity_target(sc, sigma * mu, Some(&second))
            })
            .collect();
        let dir = direction(&model, &scales, &fac, &res, &rhat);
        let (ap, ad) = step_lengths(&scales, &dir)?;
        let ap = (options.step_fraction * ap).min(1.0);
        let ad = (options.step_fraction * ad).min(1.0);
        take_step(&mut it, &dir, ap, ad);
        iterations += 1;
        if ap.max(ad) < 1e-10 {
            log::warn!("step lengths collapsed at iteration {iterations}");
            status = SolveStatus::Stalled;
            break;
        }
    }

    let res = residuals(&model, &it, &norms);
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let min_eig = problem.min_cone_eigenvalue(&it.x, &it.ys)?;
    let psd_violation = min_eig.min(0.0);
    if status == SolveStatus::Optimal && psd_violation < -options.feas_tol {
        log::warn!("converged iterate violates the cone by {psd_violation:e}");
        status = SolveStatus::Stalled;
    }
    let duality_gap = (res.pobj - res.dobj).abs();
    Ok(SdpSolution {
        status,
        primal_objective: sign * res.pobj,
        dual_objective: sign * res.dobj,
        duality_gap,
        relative_gap: duality_gap / 1f64.max(res.pobj.abs()),
        primal_infeasibility: res.pinf,
        dual_infeasibility: res.dinf,
        psd_violation,
        equality_residual: problem.equality_residual(&it.x),
        iterations,
        scalars: it.x,
        matrices: it.ys,
    })
}
