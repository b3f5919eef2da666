use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid simplex {vertices:?}: {reason}")]
    InvalidSimplex { vertices: Vec<usize>, reason: String },

    #[error("order {order} out of range {min}..={max}")]
    OrderOutOfRange { order: usize, min: usize, max: usize },

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("weight at order {order}, index {index} is {value}; weights must be positive and finite")]
    InvalidWeight { order: usize, index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid point cloud: {0}")]
    InvalidPointCloud(String),

    #[error("symmetric eigensolver did not converge within {iterations} iterations (matrix size {size})")]
    EigenNonConvergence { iterations: usize, size: usize },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),

    #[error("numerical failure in SDP solver: {0}")]
    Numerical(String),

    #[error("SDP objective {sdp} and direct recomputation {direct} disagree beyond relative tolerance {tol}")]
    SolverAccuracy { sdp: f64, direct: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Validation errors are caused by bad input, as opposed to I/O or solver trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSimplex { .. }
                | Error::OrderOutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidWeight { .. }
                | Error::NonFinite(_)
                | Error::InvalidPointCloud(_)
                | Error::InvalidProblem(_)
                | Error::Parse(_)
                | Error::Json(_)
                | Error::Degenerate(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_))
    }
}
