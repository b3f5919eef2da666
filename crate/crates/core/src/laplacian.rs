//! Simplex weights and weighted Hodge Laplacians.
//!
//! With `W_k = diag(w_k)` the `k`-th weighted Hodge Laplacian is
//!
//! ```text
//! L_k = B_k^T W_{k-1}^{-1} B_k W_k  +  W_k^{-1} B_{k+1} W_{k+1} B_{k+1}^T
//!       \_______ down _________/      \____________ up ____________/
//! ```
//!
//! `L_k` is not symmetric unless `w_k` is constant, but it is similar to the
//! symmetric matrix `W_k^{1/2} L_k W_k^{-1/2}`, which is what every
//! eigensolve in this crate works on.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::linalg::{scale_cols, scale_rows};

/// Smallest admissible weight; smaller values are clamped to it.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// Positive weights for every simplex, one vector per order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightAssignment {
    per_order: Vec<DVector<f64>>,
    clamped: usize,
}

impl WeightAssignment {
    /// All weights equal to one.
    pub fn uniform(complex: &SimplicialComplex) -> Self {
        WeightAssignment {
            per_order: complex.counts().into_iter().map(|n| DVector::from_element(n, 1.0)).collect(),
            clamped: 0,
        }
    }

    /// Validates lengths against `complex` and rejects non-positive or
    /// non-finite entries. Positive entries below [`WEIGHT_FLOOR`] are raised to it.
    pub fn new(complex: &SimplicialComplex, per_order: Vec<DVector<f64>>) -> Result<Self> {
        Self::check_shape(complex, &per_order)?;
        for (k, w) in per_order.iter().enumerate() {
            if let Some((i, &v)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidWeight { order: k, index: i, value: v });
            }
        }
        Ok(Self::clamp(per_order))
    }

    /// Like [`new`](Self::new) but clamps every finite entry below the floor,
    /// including zeros and small negatives left by a solver.
    pub fn with_floor(complex: &SimplicialComplex, per_order: Vec<DVector<f64>>) -> Result<Self> {
        Self::check_shape(complex, &per_order)?;
        for (k, w) in per_order.iter().enumerate() {
            if let Some((i, &v)) = w.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::InvalidWeight { order: k, index: i, value: v });
            }
        }
        Ok(Self::clamp(per_order))
    }

    fn check_shape(complex: &SimplicialComplex, per_order: &[DVector<f64>]) -> Result<()> {
        let counts = complex.counts();
        if per_order.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                what: "number of weight vectors",
                expected: counts.len(),
                got: per_order.len(),
            });
        }
        for (w, &n) in per_order.iter().zip(&counts) {
            if w.len() != n {
                return Err(Error::DimensionMismatch { what: "weight vector length", expected: n, got: w.len() });
            }
        }
        Ok(())
    }

    fn clamp(mut per_order: Vec<DVector<f64>>) -> Self {
        let mut clamped = 0;
        for w in &mut per_order {
            for v in w.iter_mut() {
                if *v < WEIGHT_FLOOR {
                    *v = WEIGHT_FLOOR;
                    clamped += 1;
                }
            }
        }
        if clamped > 0 {
            log::warn!("{clamped} weight(s) raised to the floor {WEIGHT_FLOOR:e}");
        }
        WeightAssignment { per_order, clamped }
    }

    /// Weights of order `k`; empty beyond the complex dimension.
    pub fn order(&self, k: usize) -> DVector<f64> {
        self.per_order.get(k).cloned().unwrap_or_else(|| DVector::zeros(0))
    }

    pub fn orders(&self) -> &[DVector<f64>] {
        &self.per_order
    }

    /// How many entries were raised to [`WEIGHT_FLOOR`] on construction.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn to_json_map(&self) -> BTreeMap<String, Vec<f64>> {
        self.per_order.iter().enumerate().map(|(k, w)| (k.to_string(), w.iter().copied().collect())).collect()
    }

    /// Reads `{"0": [...], "1": [...], ...}`. Orders not listed default to one.
    pub fn from_json(complex: &SimplicialComplex, text: &str) -> Result<Self> {
        let map: WeightsJson = serde_json::from_str(text)?;
        let mut per_order: Vec<DVector<f64>> =
            complex.counts().into_iter().map(|n| DVector::from_element(n, 1.0)).collect();
        for (key, values) in map.0 {
            let k: usize =
                key.parse().map_err(|_| Error::Parse(format!("weight order key {key:?} is not an integer")))?;
            if k >= per_order.len() {
                return Err(Error::OrderOutOfRange { order: k, min: 0, max: complex.dimension() });
            }
            per_order[k] = DVector::from_vec(values);
        }
        Self::new(complex, per_order)
    }
}

#[derive(Deserialize, Serialize)]
struct WeightsJson(BTreeMap<String, Vec<f64>>);

/// `g^T W f = sum_i w_i f_i g_i`.
pub fn weighted_inner_product(f: &DVector<f64>, g: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    if f.len() != w.len() || g.len() != w.len() {
        return Err(Error::DimensionMismatch {
            what: "chain length for inner product",
            expected: w.len(),
            got: if f.len() != w.len() { f.len() } else { g.len() },
        });
    }
    Ok(f.iter().zip(g.iter()).zip(w.iter()).map(|((a, b), c)| a * b * c).sum())
}

/// The weighted Hodge Laplacian of one order together with its parts.
#[derive(Clone, Debug)]
pub struct HodgeLaplacian {
    order: usize,
    down: DMatrix<f64>,
    up: DMatrix<f64>,
    full: DMatrix<f64>,
    sym_down: DMatrix<f64>,
    sym_up: DMatrix<f64>,
    weights: WeightAssignment,
}

impl HodgeLaplacian {
    /// Assembles `L_k` for `0 <= k <= dimension`.
    pub fn assemble(complex: &SimplicialComplex, weights: &WeightAssignment, k: usize) -> Result<Self> {
        let top = complex.dimension();
        if k > top {
            return Err(Error::OrderOutOfRange { order: k, min: 0, max: top });
        }
        WeightAssignment::check_shape(complex, weights.orders())?;

        let n = complex.count(k);
        let wk = weights.order(k);
        let sqrt_wk = wk.map(f64::sqrt);
        let inv_wk = wk.map(|x| 1.0 / x);

        let (down, sym_down) = if k >= 1 {
            let b = complex.boundary_or_zero(k).to_dense();
            let inv_lower = weights.order(k - 1).map(|x| 1.0 / x);
            // B_k^T W_{k-1}^{-1} B_k
            let core = b.transpose() * scale_rows(&b, &inv_lower);
            let down = scale_cols(&core, &wk);
            let sym = scale_cols(&scale_rows(&core, &sqrt_wk), &sqrt_wk);
            (down, sym)
        } else {
            (DMatrix::zeros(n, n), DMatrix::zeros(n, n))
        };

        let (up, sym_up) = if k < top {
            let b = complex.boundary_or_zero(k + 1).to_dense();
            let upper = weights.order(k + 1);
            // B_{k+1} W_{k+1} B_{k+1}^T
            let core = scale_cols(&b, &upper) * b.transpose();
            let up = scale_rows(&core, &inv_wk);
            let inv_sqrt = sqrt_wk.map(|x| 1.0 / x);
            let sym = scale_cols(&scale_rows(&core, &inv_sqrt), &inv_sqrt);
            (up, sym)
        } else {
            (DMatrix::zeros(n, n), DMatrix::zeros(n, n))
        };

        let full = &down + &up;
        Ok(HodgeLaplacian { order: k, down, up, full, sym_down, sym_up, weights: weights.clone() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.full.nrows()
    }

    /// `L^d_k`.
    pub fn down(&self) -> &DMatrix<f64> {
        &self.down
    }

    /// `L^u_k`.
    pub fn up(&self) -> &DMatrix<f64> {
        &self.up
    }

    /// `L_k = L^d_k + L^u_k`.
    pub fn full(&self) -> &DMatrix<f64> {
        &self.full
    }

    /// `W_k^{1/2} L^d_k W_k^{-1/2}`, assembled in factored form.
    pub fn symmetric_down(&self) -> &DMatrix<f64> {
        &self.sym_down
    }

    /// `W_k^{1/2} L^u_k W_k^{-1/2}`, assembled in factored form.
    pub fn symmetric_up(&self) -> &DMatrix<f64> {
        &self.sym_up
    }

    /// Symmetric form of the full Laplacian, assembled in factored form.
    pub fn symmetric_full(&self) -> DMatrix<f64> {
        &self.sym_down + &self.sym_up
    }

    pub fn weights(&self) -> &WeightAssignment {
        &self.weights
    }

    /// `w_k`, the weights of the simplices this Laplacian acts on.
    pub fn own_weights(&self) -> DVector<f64> {
        self.weights.order(self.order)
    }

    /// `L_k x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.full * x
    }
}

/// `W_k^{1/2} L_k W_k^{-1/2}`, computed as a similarity transform of `L_k`.
pub fn symmetrize(lap: &HodgeLaplacian) -> DMatrix<f64> {
    let sqrt_w = lap.own_weights().map(f64::sqrt);
    let inv_sqrt = sqrt_w.map(|x| 1.0 / x);
    scale_cols(&scale_rows(lap.full(), &sqrt_w), &inv_sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigenvalues;
    use approx::assert_relative_eq;

    fn triangle() -> SimplicialComplex {
        SimplicialComplex::build([[0, 1, 2]], 2).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let ones = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert_eq!(weighted_inner_product(&ones, &ones, &ones).unwrap(), 3.0);
        let f = DVector::from_vec(vec![1.0, 0.0]);
        let g = DVector::from_vec(vec![0.0, 1.0]);
        let w = DVector::from_vec(vec![3.0, 5.0]);
        assert_eq!(weighted_inner_product(&f, &g, &w).unwrap(), 0.0);
        let f = DVector::from_vec(vec![2.0, 1.0]);
        let g = DVector::from_vec(vec![1.0, 3.0]);
        let w = DVector::from_vec(vec![0.5, 2.0]);
        assert_relative_eq!(weighted_inner_product(&f, &g, &w).unwrap(), 7.0);
        assert!(weighted_inner_product(&f, &ones, &w).is_err());
    }

    #[test]
    fn unweighted_triangle_spectra() {
        let c = triangle();
        let w = WeightAssignment::uniform(&c);
        let l0 = HodgeLaplacian::assemble(&c, &w, 0).unwrap();
        let ev = sym_eigenvalues(&l0.symmetric_full()).unwrap();
        assert_relative_eq!(ev, DVector::from_vec(vec![0.0, 3.0, 3.0]), epsilon = 1e-12);
        let l1 = HodgeLaplacian::assemble(&c, &w, 1).unwrap();
        let ev = sym_eigenvalues(&l1.symmetric_full()).unwrap();
        assert_relative_eq!(ev, DVector::from_vec(vec![3.0, 3.0, 3.0]), epsilon = 1e-12);
    }

    #[test]
    fn unit_weights_match_unweighted_definition() {
        let c = SimplicialComplex::build([vec![0, 1, 2], vec![1, 2, 3], vec![3, 4]], 2).unwrap();
        let w = WeightAssignment::uniform(&c);
        for k in 0..=2 {
            let l = HodgeLaplacian::assemble(&c, &w, k).unwrap();
            let n = c.count(k);
            let mut expected = DMatrix::zeros(n, n);
            if k >= 1 {
                let b = c.boundary_matrix(k).unwrap().to_dense();
                expected += b.transpose() * &b;
            }
            if k < 2 {
                let b = c.boundary_matrix(k + 1).unwrap().to_dense();
                expected += &b * b.transpose();
            }
            assert_eq!(l.full(), &expected);
        }
    }

    #[test]
    fn vertex_laplacian_is_weighted_consensus() {
        // W_0 L_0 = B_1 W_1 B_1^T
        let c = triangle();
        let w = WeightAssignment::new(
            &c,
            vec![
                DVector::from_vec(vec![1.0, 2.0, 0.5]),
                DVector::from_vec(vec![3.0, 1.0, 2.0]),
                DVector::from_vec(vec![1.0]),
            ],
        )
        .unwrap();
        let l0 = HodgeLaplacian::assemble(&c, &w, 0).unwrap();
        let b1 = c.boundary_matrix(1).unwrap().to_dense();
        let lhs = DMatrix::from_diagonal(&w.order(0)) * l0.full();
        let rhs = &b1 * DMatrix::from_diagonal(&w.order(1)) * b1.transpose();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        assert_eq!(l0.down(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn edge_laplacian_on_graph() {
        let c = SimplicialComplex::build([vec![0, 1], vec![1, 2], vec![0, 2]], 1).unwrap();
        let w = WeightAssignment::new(
            &c,
            vec![DVector::from_vec(vec![2.0, 1.0, 4.0]), DVector::from_vec(vec![1.0, 3.0, 0.5])],
        )
        .unwrap();
        let l1 = HodgeLaplacian::assemble(&c, &w, 1).unwrap();
        let b1 = c.boundary_matrix(1).unwrap().to_dense();
        let expected = b1.transpose()
            * DMatrix::from_diagonal(&w.order(0).map(|x| 1.0 / x))
            * &b1
            * DMatrix::from_diagonal(&w.order(1));
        assert_relative_eq!(l1.full(), &expected, epsilon = 1e-12);
        assert_eq!(l1.up(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn symmetrize_weighted_triangle() {
        let c = triangle();
        let w = WeightAssignment::new(
            &c,
            vec![DVector::from_element(3, 1.0), DVector::from_vec(vec![1.0, 2.0, 4.0]), DVector::from_element(1, 1.0)],
        )
        .unwrap();
        let l1 = HodgeLaplacian::assemble(&c, &w, 1).unwrap();
        let s = symmetrize(&l1);
        assert!((&s - s.transpose()).norm() <= 1e-12 * s.norm());
        assert!((l1.full() - l1.full().transpose()).norm() > 0.1);
        assert_relative_eq!(s, l1.symmetric_full(), epsilon = 1e-12);
    }

    #[test]
    fn symmetrize_identity_weights_is_noop() {
        let c = triangle();
        let l1 = HodgeLaplacian::assemble(&c, &WeightAssignment::uniform(&c), 1).unwrap();
        assert_eq!(&symmetrize(&l1), l1.full());
    }

    #[test]
    fn weight_validation() {
        let c = triangle();
        let bad =
            vec![DVector::from_element(3, 1.0), DVector::from_vec(vec![1.0, 0.0, 1.0]), DVector::from_element(1, 1.0)];
        assert!(matches!(WeightAssignment::new(&c, bad.clone()), Err(Error::InvalidWeight { order: 1, index: 1, .. })));
        let floored = WeightAssignment::with_floor(&c, bad).unwrap();
        assert_eq!(floored.clamped(), 1);
        assert_eq!(floored.order(1)[1], WEIGHT_FLOOR);
        let short = vec![DVector::from_element(3, 1.0)];
        assert!(matches!(WeightAssignment::new(&c, short), Err(Error::DimensionMismatch { .. })));
        let tiny = vec![DVector::from_element(3, 1e-12), DVector::from_element(3, 1.0), DVector::from_element(1, 1.0)];
        assert_eq!(WeightAssignment::new(&c, tiny).unwrap().clamped(), 3);
    }

    #[test]
    fn weights_json() {
        let c = triangle();
        let w = WeightAssignment::from_json(&c, r#"{"2": [0.5]}"#).unwrap();
        assert_eq!(w.order(2)[0], 0.5);
        assert_eq!(w.order(0), DVector::from_element(3, 1.0));
        let text = serde_json::to_string(&w.to_json_map()).unwrap();
        assert_eq!(WeightAssignment::from_json(&c, &text).unwrap(), w);
        assert!(WeightAssignment::from_json(&c, r#"{"5": [1.0]}"#).is_err());
    }

    #[test]
    fn order_out_of_range() {
        let c = triangle();
        assert!(HodgeLaplacian::assemble(&c, &WeightAssignment::uniform(&c), 3).is_err());
    }
}
