use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_min_eigenvalue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A conic constraint `constant + sum_i x_i F_i (+ P Y P^T) in cone`.
#[derive(Clone, Debug)]
pub enum ConeBlock {
    /// Positive semidefinite cone of symmetric matrices.
    Psd { constant: DMatrix<f64> },
    /// Non-negative orthant, i.e. a diagonal PSD block.
    Nonneg { constant: DVector<f64> },
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match self {
            ConeBlock::Psd { constant } => constant.nrows(),
            ConeBlock::Nonneg { constant } => constant.len(),
        }
    }
}

/// The coefficient of one scalar decision variable in one block.
#[derive(Clone, Debug)]
pub enum Coefficient {
    /// Symmetric matrix in a PSD block.
    Dense(DMatrix<f64>),
    /// `sum_r scales[r] * v_r v_r^T`, with `v_r` the columns of `vectors`, in a PSD block.
    LowRank { vectors: DMatrix<f64>, scales: DVector<f64> },
    /// Sparse `(row, value)` entries in a non-negative block.
    Entries(Vec<(usize, f64)>),
}

impl Coefficient {
    pub fn rank_one(v: DVector<f64>, scale: f64) -> Self {
        let n = v.len();
        Coefficient::LowRank {
            vectors: DMatrix::from_column_slice(n, 1, v.as_slice()),
            scales: DVector::from_element(1, scale),
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        match self {
            Coefficient::Dense(m) => m.clone(),
            Coefficient::LowRank { vectors, scales } => {
                let mut scaled = vectors.clone();
                for (j, mut c) in scaled.column_iter_mut().enumerate() {
                    c *= scales[j];
                }
                scaled * vectors.transpose()
            }
            Coefficient::Entries(e) => {
                let mut m = DMatrix::zeros(n, n);
                for &(i, v) in e {
                    m[(i, i)] += v;
                }
                m
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub block: usize,
    pub coefficient: Coefficient,
}

#[derive(Clone, Debug)]
pub struct ScalarVariable {
    pub name: String,
    pub cost: f64,
    pub terms: Vec<Term>,
}

/// A free symmetric matrix variable `Y` entering one PSD block as the
/// principal sub-block `[offset, offset + dim)` with coefficient one.
#[derive(Clone, Debug)]
pub struct MatrixVariable {
    pub name: String,
    pub block: usize,
    pub offset: usize,
    pub dim: usize,
    /// Objective contribution `<cost, Y>`.
    pub cost: DMatrix<f64>,
}

/// `sum coefficients[j].1 * x[coefficients[j].0] = rhs`, over scalar variables.
#[derive(Clone, Debug)]
pub struct LinearEquality {
    pub coefficients: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// A named range of scalar variables, e.g. one weight vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionGroup {
    pub name: String,
    pub range: Range<usize>,
}

/// Semidefinite program over scalar and symmetric-matrix decision variables.
///
/// ```text
/// optimize  sum_i cost_i x_i + sum_Y <cost_Y, Y>
/// s.t.      constant_b + sum_i x_i F_ib + P_b Y_b P_b^T  in cone_b   for every block b
///           equalities on x
/// ```
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub sense: Sense,
    pub blocks: Vec<ConeBlock>,
    pub scalars: Vec<ScalarVariable>,
    pub matrices: Vec<MatrixVariable>,
    pub equalities: Vec<LinearEquality>,
    pub groups: Vec<DecisionGroup>,
}

const SYMMETRY_TOL: f64 = 1e-12;

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidProblem(format!("{what} is not square")));
    }
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * m.amax().max(1.0) {
        return Err(Error::InvalidProblem(format!("{what} is not symmetric (asymmetry {asym:e})")));
    }
    Ok(())
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        SdpProblem {
            sense,
            blocks: Vec::new(),
            scalars: Vec::new(),
            matrices: Vec::new(),
            equalities: Vec::new(),
            groups: Vec::new(),
        }
    }

    pub fn add_block(&mut self, block: ConeBlock) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    pub fn add_scalar(&mut self, name: impl Into<String>, cost: f64, terms: Vec<Term>) -> usize {
        self.scalars.push(ScalarVariable { name: name.into(), cost, terms });
        self.scalars.len() - 1
    }

    pub fn group(&self, name: &str) -> Option<Range<usize>> {
        self.groups.iter().find(|g| g.name == name).map(|g| g.range.clone())
    }

    pub fn num_scalars(&self) -> usize {
        self.scalars.len()
    }

    /// Checks shapes, symmetry and the structural restrictions of the solver.
    pub fn validate(&self) -> Result<()> {
        if self.scalars.is_empty() && self.matrices.is_empty() {
            return Err(Error::InvalidProblem("no decision variables".into()));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            match block {
                ConeBlock::Psd { constant } => check_symmetric(constant, &format!("constant of block {b}"))?,
                ConeBlock::Nonneg { .. } => {}
            }
        }
        for (i, var) in self.scalars.iter().enumerate() {
            if var.terms.is_empty() {
                return Err(Error::InvalidProblem(format!(
                    "scalar variable {} ({i}) appears in no cone constraint",
                    var.name
                )));
            }
            for term in &var.terms {
                let block = self.blocks.get(term.block).ok_or_else(|| {
                    Error::InvalidProblem(format!("variable {} refers to missing block {}", var.name, term.block))
                })?;
                let n = block.dim();
                match (block, &term.coefficient) {
                    (ConeBlock::Psd { .. }, Coefficient::Dense(m)) => {
                        if m.nrows() != n {
                            return Err(Error::InvalidProblem(format!("coefficient of {} has wrong size", var.name)));
                        }
                        check_symmetric(m, &format!("coefficient of {}", var.name))?;
                    }
                    (ConeBlock::Psd { .. }, Coefficient::LowRank { vectors, scales }) => {
                        if vectors.nrows() != n || vectors.ncols() != scales.len() {
                            return Err(Error::InvalidProblem(format!(
                                "low-rank coefficient of {} has wrong shape",
                                var.name
                            )));
                        }
                    }
                    (ConeBlock::Nonneg { .. }, Coefficient::Entries(e)) => {
                        if e.iter().any(|&(r, _)| r >= n) {
                            return Err(Error::InvalidProblem(format!("entry of {} out of range", var.name)));
                        }
                    }
                    _ => {
                        return Err(Error::InvalidProblem(format!(
                            "coefficient kind of {} does not match block {}",
                            var.name, term.block
                        )))
                    }
                }
            }
        }
        let mut used_blocks = Vec::new();
        for y in &self.matrices {
            match self.blocks.get(y.block) {
                Some(ConeBlock::Psd { constant }) => {
                    if y.dim == 0 || y.offset + y.dim > constant.nrows() {
                        return Err(Error::InvalidProblem(format!(
                            "matrix variable {} does not fit its block",
                            y.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidProblem(format!("matrix variable {} needs a PSD block", y.name)));
                }
            }
            if used_blocks.contains(&y.block) {
                return Err(Error::InvalidProblem("at most one matrix variable per block is supported".into()));
            }
            used_blocks.push(y.block);
            if y.cost.shape() != (y.dim, y.dim) {
                return Err(Error::InvalidProblem(format!("cost of {} has wrong shape", y.name)));
            }
            check_symmetric(&y.cost, &format!("cost of {}", y.name))?;
        }
        for eq in &self.equalities {
            if eq.coefficients.iter().any(|&(i, _)| i >= self.scalars.len()) {
                return Err(Error::InvalidProblem("equality refers to a missing variable".into()));
            }
            if eq.coefficients.is_empty() {
                return Err(Error::InvalidProblem("empty equality constraint".into()));
            }
        }
        for g in &self.groups {
            if g.range.end > self.scalars.len() {
                return Err(Error::InvalidProblem(format!("group {} out of range", g.name)));
            }
        }
        Ok(())
    }

    /// Value of block `b` at the given decision.
    pub fn block_value(&self, b: usize, x: &DVector<f64>, matrices: &[DMatrix<f64>]) -> DMatrix<f64> {
        let block = &self.blocks[b];
        let n = block.dim();
        let mut value = match block {
            ConeBlock::Psd { constant } => constant.clone(),
            ConeBlock::Nonneg { constant } => DMatrix::from_diagonal(constant),
        };
        for (i, var) in self.scalars.iter().enumerate() {
            for term in var.terms.iter().filter(|t| t.block == b) {
                value += term.coefficient.to_dense(n) * x[i];
            }
        }
        for (y, m) in self.matrices.iter().zip(matrices) {
            if y.block == b {
                let mut view = value.view_mut((y.offset, y.offset), (y.dim, y.dim));
                view += m;
            }
        }
        value
    }

    /// Objective in the problem's own sense.
    pub fn objective(&self, x: &DVector<f64>, matrices: &[DMatrix<f64>]) -> f64 {
        let scalar: f64 = self.scalars.iter().zip(x.iter()).map(|(v, xi)| v.cost * xi).sum();
        let mat: f64 = self.matrices.iter().zip(matrices).map(|(y, m)| crate::linalg::frob_dot(&y.cost, m)).sum();
        scalar + mat
    }

    /// Smallest eigenvalue over all cone blocks at the given decision.
    pub fn min_cone_eigenvalue(&self, x: &DVector<f64>, matrices: &[DMatrix<f64>]) -> Result<f64> {
        let mut min = f64::INFINITY;
        for b in 0..self.blocks.len() {
            let v = self.block_value(b, x, matrices);
            let e = match &self.blocks[b] {
                ConeBlock::Nonneg { .. } => v.diagonal().min(),
                ConeBlock::Psd { .. } => sym_min_eigenvalue(&v)?,
            };
            min = min.min(e);
        }
        Ok(min)
    }

    /// Largest absolute equality residual.
    pub fn equality_residual(&self, x: &DVector<f64>) -> f64 {
        self.equalities
            .iter()
            .map(|eq| (eq.coefficients.iter().map(|&(i, a)| a * x[i]).sum::<f64>() - eq.rhs).abs())
            .fold(0.0, f64::max)
    }
}
