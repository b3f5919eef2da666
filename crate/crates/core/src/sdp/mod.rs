//! Semidefinite programs and an interior-point solver for them.

mod problem;
mod solver;

pub use problem::{
    Coefficient, ConeBlock, DecisionGroup, LinearEquality, MatrixVariable, ScalarVariable, SdpProblem, Sense, Term,
};
pub use solver::{solve_sdp, SdpSolution, SolveStatus, SolverCertificate, SolverOptions};
