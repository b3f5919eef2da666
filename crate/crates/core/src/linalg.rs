//! Dense linear-algebra helpers shared by the spectral, decomposition and SDP code.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

const EIGEN_MAX_ITER: usize = 10_000;

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending order.
///
/// Only the lower triangle is read.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNonConvergence { iterations: EIGEN_MAX_ITER, size: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNonConvergence { iterations: EIGEN_MAX_ITER, size: n })?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(DVector::from_vec(v))
}

/// Smallest eigenvalue of a symmetric matrix (`+inf` for an empty matrix).
pub fn sym_min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `(m + m^T) / 2`.
pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `diag(d) * m`.
pub fn scale_rows(m: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i];
    }
    out
}

/// `m * diag(d)`.
pub fn scale_cols(m: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

/// Relative cutoff below which singular values are treated as zero.
pub const RANK_RTOL: f64 = 1e-10;

fn svd_cutoff(svd: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    RANK_RTOL * smax.max(f64::MIN_POSITIVE)
}

/// Numerical rank with the relative cutoff [`RANK_RTOL`].
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = SVD::new(m.clone(), false, false);
    let cut = svd_cutoff(&svd);
    svd.singular_values.iter().filter(|&&s| s > cut).count()
}

/// Moore–Penrose pseudoinverse through the SVD.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = SVD::new(m.clone(), true, true);
    let cut = svd_cutoff(&svd);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    pseudo_inverse(a) * b
}

/// Orthonormal basis (as columns) of the null space of `m`.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 {
        return DMatrix::identity(c, c);
    }
    // Pad with zero rows so the SVD returns a complete right basis.
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = RANK_RTOL * smax.max(1.0);
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let cols: Vec<DVector<f64>> =
        svd.singular_values.iter().enumerate().filter(|(_, &s)| s <= cut).map(|(i, _)| vt.row(i).transpose()).collect();
    if cols.is_empty() {
        DMatrix::zeros(c, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Frobenius inner product `<a, b> = tr(a^T b)`.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn all_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> bool {
    values.into_iter().all(|x| x.is_finite())
}
