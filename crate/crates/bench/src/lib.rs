//! Fixtures shared by the benchmarks in `benches/`.

use hodgeflow_core::experiment::{generate, initial_signal, ExperimentConfig, Instance};
use hodgeflow_core::ChainSignal;

/// Seeded Vietoris–Rips instance on `n_points` uniform points.
pub fn instance(seed: u64, n_points: usize, epsilon: f64) -> Instance {
    generate(&ExperimentConfig { seed, n_points, epsilon, ..ExperimentConfig::default() })
        .expect("valid sampling parameters")
}

/// Standard-normal edge signal matching the pipeline's initial condition.
pub fn edge_signal(seed: u64, instance: &Instance) -> ChainSignal {
    ChainSignal::new(&instance.complex, 1, initial_signal(seed, instance.complex.count(1))).expect("edge signal length")
}
