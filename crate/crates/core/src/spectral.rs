//! Spectra, harmonic kernels and the two spectral objectives.

use nalgebra::{DMatrix, DVector};

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::laplacian::HodgeLaplacian;
use crate::linalg::{null_space, scale_rows, sym_eigen};

/// Relative threshold for treating an eigenvalue as zero.
pub const ZERO_RTOL: f64 = 1e-9;

/// Zero threshold `1e-9 * max(1, lambda_max)`.
pub fn zero_tolerance(lambda_max: f64) -> f64 {
    ZERO_RTOL * lambda_max.max(1.0)
}

/// Real eigendecomposition of a weighted Hodge Laplacian.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Eigenvectors of `L_k`, orthonormal in the `W_k` inner product.
    pub eigenvectors: DMatrix<f64>,
    /// Eigenvectors of the symmetric form, Euclidean-orthonormal.
    pub symmetric_eigenvectors: DMatrix<f64>,
    pub kernel_dim: usize,
    pub zero_tol: f64,
}

impl SpectralData {
    /// Eigenvalues strictly above the zero threshold.
    pub fn nonzero_eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().copied().filter(move |&l| l >= self.zero_tol)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }
}

/// Eigendecomposition via the symmetric similarity `W_k^{1/2} L_k W_k^{-1/2}`.
pub fn spectrum(lap: &HodgeLaplacian) -> Result<SpectralData> {
    let (eigenvalues, sym_vecs) = sym_eigen(&lap.symmetric_full())?;
    let inv_sqrt = lap.own_weights().map(|w| 1.0 / w.sqrt());
    let eigenvectors = scale_rows(&sym_vecs, &inv_sqrt);
    let lmax = eigenvalues.iter().copied().fold(0.0, f64::max);
    let zero_tol = zero_tolerance(lmax);
    let kernel_dim = eigenvalues.iter().filter(|&&l| l < zero_tol).count();
    Ok(SpectralData { eigenvalues, eigenvectors, symmetric_eigenvectors: sym_vecs, kernel_dim, zero_tol })
}

/// Orthonormal basis of the harmonic space of the unweighted complex.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    pub order: usize,
    /// Columns span `ker(B_k) ∩ ker(B_{k+1}^T)`.
    pub basis: DMatrix<f64>,
    pub betti: usize,
}

impl KernelBasis {
    /// `K K^T`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

/// `ker(B_k) ∩ ker(B_{k+1}^T)` from one SVD of the stacked operator.
pub fn kernel_basis(complex: &SimplicialComplex, k: usize) -> Result<KernelBasis> {
    if k > complex.dimension() {
        return Err(Error::OrderOutOfRange { order: k, min: 0, max: complex.dimension() });
    }
    let n = complex.count(k);
    let lower = complex.boundary_or_zero(k).to_dense();
    let upper_t = complex.boundary_or_zero(k + 1).to_dense().transpose();
    let mut stacked = DMatrix::zeros(lower.nrows() + upper_t.nrows(), n);
    stacked.view_mut((0, 0), lower.shape()).copy_from(&lower);
    stacked.view_mut((lower.nrows(), 0), upper_t.shape()).copy_from(&upper_t);
    let basis = null_space(&stacked);
    let basis = if basis.nrows() == n { basis } else { DMatrix::zeros(n, 0) };
    Ok(KernelBasis { order: k, betti: basis.ncols(), basis })
}

/// `tr L_k^+ = sum over non-zero eigenvalues of 1/lambda`.
pub fn trace_pseudoinverse(lap: &HodgeLaplacian) -> Result<f64> {
    Ok(trace_pseudoinverse_from(&spectrum(lap)?))
}

pub fn trace_pseudoinverse_from(spec: &SpectralData) -> f64 {
    spec.nonzero_eigenvalues().map(|l| 1.0 / l).sum()
}

/// `tr((L_k + K K^T)^{-1}) - m`, evaluated with a Cholesky factorization.
///
/// Requires the symmetric form of `L_k` to have `kernel.basis` as its null
/// space, which holds whenever `w_k` is constant.
pub fn trace_pseudoinverse_kernel_shift(lap: &HodgeLaplacian, kernel: &KernelBasis) -> Result<f64> {
    let n = lap.dim();
    if kernel.basis.nrows() != n {
        return Err(Error::DimensionMismatch { what: "kernel basis rows", expected: n, got: kernel.basis.nrows() });
    }
    let shifted = lap.symmetric_full() + kernel.projector();
    let chol = shifted
        .cholesky()
        .ok_or_else(|| Error::Degenerate("L_k + K K^T is not positive definite; kernel basis does not match".into()))?;
    let inv = chol.inverse();
    Ok(inv.trace() - kernel.betti as f64)
}

/// Smallest eigenvalue above the zero threshold.
pub fn lambda_min_nonzero(lap: &HodgeLaplacian) -> Result<f64> {
    lambda_min_nonzero_from(&spectrum(lap)?)
}

pub fn lambda_min_nonzero_from(spec: &SpectralData) -> Result<f64> {
    spec.nonzero_eigenvalues()
        .reduce(f64::min)
        .ok_or_else(|| Error::Degenerate("all eigenvalues are zero; no non-harmonic modes".into()))
}
