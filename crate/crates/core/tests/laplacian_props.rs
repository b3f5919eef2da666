mod common;

use common::*;
use hodgeflow_core::laplacian::{HodgeLaplacian, WeightAssignment};
use hodgeflow_core::spectral::{kernel_basis, spectrum, trace_pseudoinverse, trace_pseudoinverse_kernel_shift};
use nalgebra::{DMatrix, DVector};

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

#[test]
fn assembly_matches_explicit_formula() {
    let mut r = rng(1);
    for _ in 0..15 {
        let (_, c) = random_vr(&mut r, 14, 0.45, 2);
        let w = random_weights(&mut r, &c);
        for k in 0..=c.dimension() {
            let lap = HodgeLaplacian::assemble(&c, &w, k).unwrap();
            let (down, up) = reference_laplacian(&c, &w, k);
            let scale = 1.0 + max_abs(&down) + max_abs(&up);
            assert!(max_abs(&(lap.down() - &down)) <= 1e-12 * scale);
            assert!(max_abs(&(lap.up() - &up)) <= 1e-12 * scale);
        }
    }
}

#[test]
fn weighted_boundaries_compose_to_zero() {
    let mut r = rng(2);
    for _ in 0..15 {
        let (_, c) = random_vr(&mut r, 16, 0.5, 2);
        if c.dimension() < 2 {
            continue;
        }
        let w = random_weights(&mut r, &c);
        let b1 = reference_boundary(&c, 1);
        let b2 = reference_boundary(&c, 2);
        let d = |v: DVector<f64>| DMatrix::from_diagonal(&v);
        let lhs = d(w.order(0).map(|x| 1.0 / x)) * &b1 * d(w.order(1));
        let rhs = d(w.order(1).map(|x| 1.0 / x)) * &b2 * d(w.order(2));
        assert!(max_abs(&(lhs * rhs)) <= 1e-12);
    }
}

#[test]
fn laplacians_are_positive_semidefinite() {
    let mut r = rng(3);
    for _ in 0..20 {
        let (_, c) = random_vr(&mut r, 15, 0.5, 2);
        let w = random_weights(&mut r, &c);
        for k in 0..=c.dimension() {
            let s = spectrum(&HodgeLaplacian::assemble(&c, &w, k).unwrap()).unwrap();
            assert!(s.eigenvalues.iter().all(|&l| l >= -1e-10), "order {k}: {}", s.eigenvalues.min());
        }
    }
}

#[test]
fn eigenvectors_of_non_symmetric_laplacian() {
    let mut r = rng(4);
    let (_, c) = random_vr(&mut r, 12, 0.5, 2);
    let w = random_weights(&mut r, &c);
    let lap = HodgeLaplacian::assemble(&c, &w, 1).unwrap();
    let s = spectrum(&lap).unwrap();
    let residual = lap.full() * &s.eigenvectors - &s.eigenvectors * DMatrix::from_diagonal(&s.eigenvalues);
    assert!(max_abs(&residual) <= 1e-9 * (1.0 + s.lambda_max()));
    // W_k-orthonormal.
    let gram = s.eigenvectors.transpose() * DMatrix::from_diagonal(&w.order(1)) * &s.eigenvectors;
    assert!(max_abs(&(gram - DMatrix::identity(c.count(1), c.count(1)))) <= 1e-10);
}

#[test]
fn kernel_is_weight_independent_for_unit_middle_weights() {
    let mut r = rng(5);
    let mut checked = 0;
    for _ in 0..30 {
        let (_, c) = random_vr(&mut r, 16, 0.3, 2);
        for k in 0..c.dimension() {
            let kb = kernel_basis(&c, k).unwrap();
            if kb.betti == 0 {
                continue;
            }
            let mut orders = random_weights(&mut r, &c).orders().to_vec();
            orders[k] = DVector::from_element(c.count(k), 1.0);
            let w = WeightAssignment::new(&c, orders).unwrap();
            let s = spectrum(&HodgeLaplacian::assemble(&c, &w, k).unwrap()).unwrap();
            assert_eq!(s.kernel_dim, kb.betti);
            let weighted_kernel = s.eigenvectors.columns(0, s.kernel_dim).into_owned();
            // Principal angles: singular values of K^T V all equal one.
            let sv = (kb.basis.transpose() * weighted_kernel).singular_values();
            assert!(sv.iter().all(|&x| (x - 1.0).abs() <= 1e-8), "{sv}");
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} instances with a kernel");
}

#[test]
fn kernel_shift_identity() {
    let mut r = rng(6);
    for _ in 0..20 {
        let (_, c) = random_vr(&mut r, 14, 0.4, 2);
        let mut orders = random_weights(&mut r, &c).orders().to_vec();
        orders[1] = DVector::from_element(c.count(1), 1.0);
        let w = WeightAssignment::new(&c, orders).unwrap();
        let lap = HodgeLaplacian::assemble(&c, &w, 1).unwrap();
        let direct = trace_pseudoinverse(&lap).unwrap();
        let shifted = trace_pseudoinverse_kernel_shift(&lap, &kernel_basis(&c, 1).unwrap()).unwrap();
        assert!((direct - shifted).abs() <= 1e-8 * direct.max(1.0), "{direct} vs {shifted}");
    }
}

#[test]
fn spectral_relations_between_parts() {
    let mut r = rng(7);
    for _ in 0..10 {
        let (_, c) = random_vr(&mut r, 15, 0.5, 2);
        let w = random_weights(&mut r, &c);
        for k in 0..=c.dimension() {
            assert!(spectral_relation_residual(&c, &w, k) <= 1e-8);
        }
    }
}

#[test]
fn up_eigenvectors_lift_to_down_eigenvectors() {
    let mut r = rng(8);
    for _ in 0..10 {
        let (_, c) = random_vr(&mut r, 15, 0.5, 2);
        let w = random_weights(&mut r, &c);
        let lower = HodgeLaplacian::assemble(&c, &w, 0).unwrap();
        let upper = HodgeLaplacian::assemble(&c, &w, 1).unwrap();
        let s = spectrum(&lower).unwrap();
        let b1t = reference_boundary(&c, 1).transpose();
        for (i, &l) in s.eigenvalues.iter().enumerate() {
            if l <= s.zero_tol {
                continue;
            }
            let lifted = &b1t * s.eigenvectors.column(i);
            let res = upper.down() * &lifted - &lifted * l;
            assert!(res.norm() <= 1e-8 * l * lifted.norm());
        }
    }
}
