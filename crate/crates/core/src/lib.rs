//! Weighted simplicial complexes and their Hodge Laplacians.
//!
//! The crate covers the full chain from point clouds to optimized weights:
//!
//! * [`complex`] and [`vietoris_rips`] build oriented simplicial complexes and
//!   their signed boundary matrices;
//! * [`laplacian`] and [`spectral`] assemble weighted Hodge Laplacians and
//!   evaluate `tr L_k^+` and the smallest non-zero eigenvalue;
//! * [`decomposition`] splits a chain signal into gradient, harmonic and curl parts;
//! * [`flow`] solves `dx/dt = -L_k x` exactly;
//! * [`sdp`] and [`optimizer`] find weights that optimize either spectral
//!   objective by semidefinite programming;
//! * [`experiment`] wires everything into seeded, reproducible runs.

pub mod complex;
pub mod decomposition;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod io;
pub mod laplacian;
pub mod linalg;
pub mod optimizer;
pub mod sdp;
pub mod spectral;
pub mod vietoris_rips;

pub use complex::{BoundaryMatrix, Simplex, SimplicialComplex};
pub use decomposition::{hodge_decompose, ChainSignal, DecompositionMethod, HodgeComponents, HodgeDecomposer};
pub use error::{Error, Result};
pub use flow::{simulate_flow, FlowTrajectory};
pub use laplacian::{HodgeLaplacian, WeightAssignment};
pub use optimizer::{optimize_weights, Objective, WeightOptimizationResult, WeightSelection};
pub use sdp::{solve_sdp, SdpProblem, SdpSolution, SolveStatus, SolverOptions};
pub use spectral::{lambda_min_nonzero, trace_pseudoinverse};
pub use vietoris_rips::{build_vietoris_rips, PointCloud};
