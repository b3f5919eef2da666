mod common;

use common::*;
use hodgeflow_core::complex::SimplicialComplex;
use hodgeflow_core::vietoris_rips::{build_vietoris_rips, PointCloud};
use proptest::prelude::*;

fn cloud_strategy(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 1..=max_n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_of_boundary_is_exactly_zero(points in cloud_strategy(14), eps in 0.2..0.9f64) {
        let complex = build_vietoris_rips(&PointCloud::new(points).unwrap(), eps, 3).unwrap();
        for k in 1..complex.dimension() {
            let prod = complex.boundary_matrix(k).unwrap().product_nonzeros(&complex.boundary_matrix(k + 1).unwrap());
            prop_assert!(prod.is_empty(), "B_{} B_{} has non-zeros {:?}", k, k + 1, prod);
        }
        prop_assert!(complex.is_closed());
    }

    #[test]
    fn vietoris_rips_matches_subset_scan(points in cloud_strategy(12), eps in 0.1..1.0f64, max_order in 1usize..4) {
        let complex = build_vietoris_rips(&PointCloud::new(points.clone()).unwrap(), eps, max_order).unwrap();
        let expected = brute_force_vr(&points, eps, max_order.min(points.len() - 1));
        for (k, level) in expected.iter().enumerate() {
            let got: Vec<Vec<usize>> = if k <= complex.dimension() {
                complex.simplices(k).iter().map(|s| s.vertices().to_vec()).collect()
            } else {
                Vec::new()
            };
            prop_assert_eq!(&got, level, "order {}", k);
        }
    }

    #[test]
    fn boundary_matches_definition(points in cloud_strategy(10), eps in 0.3..1.0f64) {
        let complex = build_vietoris_rips(&PointCloud::new(points).unwrap(), eps, 3).unwrap();
        for k in 1..=complex.dimension() {
            prop_assert_eq!(complex.boundary_matrix(k).unwrap().to_dense(), reference_boundary(&complex, k));
        }
    }

    #[test]
    fn json_round_trip_preserves_everything(points in cloud_strategy(10), eps in 0.3..1.0f64) {
        let complex = build_vietoris_rips(&PointCloud::new(points).unwrap(), eps, 2).unwrap();
        let back = SimplicialComplex::from_json(&complex.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &complex);
    }

    #[test]
    fn build_is_order_independent(mut simplices in prop::collection::vec(prop::collection::btree_set(0usize..8, 1..4), 1..10)) {
        let lists: Vec<Vec<usize>> = simplices.iter().map(|s| s.iter().copied().collect()).collect();
        let a = SimplicialComplex::build(&lists, 3).unwrap();
        simplices.reverse();
        let reversed: Vec<Vec<usize>> = simplices.iter().map(|s| s.iter().rev().copied().collect()).collect();
        let b = SimplicialComplex::build(&reversed, 3).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.is_closed());
    }
}

#[test]
fn boundary_matrices_are_deterministic() {
    let mut r1 = rng(11);
    let mut r2 = rng(11);
    let (_, a) = random_vr(&mut r1, 25, 0.4, 2);
    let (_, b) = random_vr(&mut r2, 25, 0.4, 2);
    for k in 1..=a.dimension() {
        assert_eq!(a.boundary_matrix(k).unwrap(), b.boundary_matrix(k).unwrap());
    }
}

#[test]
fn epsilon_above_diameter_gives_complete_two_skeleton() {
    let mut r = rng(7);
    let (_, c) = random_vr(&mut r, 5, 2.0, 2);
    assert_eq!(c.counts(), vec![5, 10, 10]);
}
