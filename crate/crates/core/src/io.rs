//! Plain-text exports of matrices and Laplacians.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::laplacian::HodgeLaplacian;

/// Serializes a vector as a flat sequence.
pub fn serialize_vector<S: serde::Serializer>(v: &DVector<f64>, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_seq(v.iter())
}

/// Dense row-major CSV with 17 significant digits, which round-trips `f64`.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Which part of the Laplacian to export.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianPart {
    Full,
    Down,
    Up,
    /// `W_k^{1/2} L_k W_k^{-1/2}`.
    Symmetric,
}

impl LaplacianPart {
    pub fn select(self, lap: &HodgeLaplacian) -> DMatrix<f64> {
        match self {
            LaplacianPart::Full => lap.full().clone(),
            LaplacianPart::Down => lap.down().clone(),
            LaplacianPart::Up => lap.up().clone(),
            LaplacianPart::Symmetric => lap.symmetric_full(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LaplacianEnvelope {
    pub order: usize,
    pub part: LaplacianPart,
    pub shape: [usize; 2],
    pub weights: BTreeMap<String, Vec<f64>>,
    /// Row-major.
    pub matrix: Vec<Vec<f64>>,
}

impl LaplacianEnvelope {
    pub fn new(lap: &HodgeLaplacian, part: LaplacianPart) -> Self {
        let m = part.select(lap);
        LaplacianEnvelope {
            order: lap.order(),
            part,
            shape: [m.nrows(), m.ncols()],
            weights: lap.weights().to_json_map(),
            matrix: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}
