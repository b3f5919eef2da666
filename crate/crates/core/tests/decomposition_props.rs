mod common;

use common::*;
use hodgeflow_core::decomposition::{verify_decomposition, ChainSignal, DecompositionMethod, HodgeDecomposer};
use hodgeflow_core::linalg::numerical_rank;
use hodgeflow_core::spectral::kernel_basis;

#[test]
fn decomposition_certificates_on_random_weighted_complexes() {
    let mut r = rng(21);
    for _ in 0..20 {
        let (_, c) = random_vr(&mut r, 14, 0.45, 2);
        let w = random_weights(&mut r, &c);
        for k in 0..=c.dimension() {
            let signal = ChainSignal::new(&c, k, gaussian_vector(&mut r, c.count(k))).unwrap();
            let d = HodgeDecomposer::new(&c, &w, k, DecompositionMethod::NormalEquations).unwrap();
            let parts = d.decompose(&signal).unwrap();
            let rep = verify_decomposition(&parts, &c, &w, &signal).unwrap();
            assert!(rep.relative_reconstruction <= 1e-8, "{rep:?}");
            assert!(rep.relative_harmonic_residual <= 1e-8, "{rep:?}");
            assert!(rep.max_orthogonality() <= 1e-8 * signal.values.norm_squared().max(1.0), "{rep:?}");
        }
    }
}

#[test]
fn least_squares_and_normal_equations_agree() {
    let mut r = rng(22);
    for _ in 0..20 {
        let (_, c) = random_vr(&mut r, 14, 0.45, 2);
        let w = random_weights(&mut r, &c);
        for k in 0..=c.dimension() {
            let values = gaussian_vector(&mut r, c.count(k));
            let a = HodgeDecomposer::new(&c, &w, k, DecompositionMethod::NormalEquations)
                .unwrap()
                .decompose_values(&values)
                .unwrap();
            let b = HodgeDecomposer::new(&c, &w, k, DecompositionMethod::LeastSquares)
                .unwrap()
                .decompose_values(&values)
                .unwrap();
            let scale = values.norm().max(1.0);
            assert!((&a.gradient - &b.gradient).amax() <= 1e-8 * scale);
            assert!((&a.curl - &b.curl).amax() <= 1e-8 * scale);
            assert!((&a.harmonic - &b.harmonic).amax() <= 1e-8 * scale);
        }
    }
}

#[test]
fn decomposition_is_idempotent_on_each_part() {
    let mut r = rng(23);
    for _ in 0..10 {
        let (_, c) = random_vr(&mut r, 14, 0.45, 2);
        let w = random_weights(&mut r, &c);
        let k = 1.min(c.dimension());
        let d = HodgeDecomposer::new(&c, &w, k, DecompositionMethod::NormalEquations).unwrap();
        let parts = d.decompose_values(&gaussian_vector(&mut r, c.count(k))).unwrap();
        let scale = parts.gradient.norm().max(parts.curl.norm()).max(1.0);

        let again = d.decompose_values(&parts.gradient).unwrap();
        assert!((&again.gradient - &parts.gradient).amax() <= 1e-8 * scale);
        assert!(again.harmonic.amax() <= 1e-8 * scale && again.curl.amax() <= 1e-8 * scale);

        let again = d.decompose_values(&parts.curl).unwrap();
        assert!((&again.curl - &parts.curl).amax() <= 1e-8 * scale);
        assert!(again.harmonic.amax() <= 1e-8 * scale && again.gradient.amax() <= 1e-8 * scale);

        let again = d.decompose_values(&parts.harmonic).unwrap();
        assert!((&again.harmonic - &parts.harmonic).amax() <= 1e-8 * scale);
    }
}

#[test]
fn subspace_dimensions_add_up() {
    let mut r = rng(24);
    for _ in 0..20 {
        let (_, c) = random_vr(&mut r, 14, 0.4, 2);
        for k in 0..=c.dimension() {
            let grad_rank = if k >= 1 { numerical_rank(&c.boundary_or_zero(k).to_dense()) } else { 0 };
            let curl_rank = numerical_rank(&c.boundary_or_zero(k + 1).to_dense());
            let betti = kernel_basis(&c, k).unwrap().betti;
            assert_eq!(grad_rank + betti + curl_rank, c.count(k), "order {k}");
        }
    }
}
