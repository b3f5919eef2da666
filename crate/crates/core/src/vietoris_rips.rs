//! Point clouds and Vietoris–Rips complexes.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};

/// Points in `R^d`, all of the same dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::InvalidPointCloud("points must have dimension >= 1".into()));
            }
            for (i, p) in points.iter().enumerate() {
                if p.len() != d {
                    return Err(Error::InvalidPointCloud(format!("point {i} has dimension {}, expected {d}", p.len())));
                }
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidPointCloud(format!("point {i} is not finite")));
                }
            }
        }
        Ok(PointCloud { points })
    }

    /// `n` points drawn uniformly from the unit square.
    pub fn uniform_unit_square<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let points = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// One point per row, no header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate {f:?}"))))
                .collect::<Result<Vec<_>>>()?;
            points.push(row);
        }
        Self::new(points)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Vietoris–Rips complex of `cloud` at scale `epsilon` under the Euclidean metric.
pub fn build_vietoris_rips(cloud: &PointCloud, epsilon: f64, max_order: usize) -> Result<SimplicialComplex> {
    build_vietoris_rips_with(cloud, epsilon, max_order, euclidean)
}

/// Vietoris–Rips complex under a caller-supplied distance.
///
/// Edge `{i, j}` is present iff `distance(p_i, p_j) <= epsilon`; a vertex set
/// is a simplex iff it is a clique of that graph. Cliques are grown by
/// intersecting forward-neighbour lists, so every simplex is produced once.
pub fn build_vietoris_rips_with<F>(
    cloud: &PointCloud,
    epsilon: f64,
    max_order: usize,
    distance: F,
) -> Result<SimplicialComplex>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidPointCloud(format!("epsilon must be positive, got {epsilon}")));
    }
    if max_order < 1 {
        return Err(Error::OrderOutOfRange { order: max_order, min: 1, max: usize::MAX });
    }
    let n = cloud.len();
    if n == 0 {
        return Ok(SimplicialComplex::from_levels(vec![BTreeSet::new()]));
    }
    let mut max_order = max_order;
    if max_order > n - 1 {
        log::warn!("max_order {max_order} exceeds N - 1 = {}; clamping", n - 1);
        max_order = n - 1;
    }

    let pts = cloud.points();
    let mut forward: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if distance(&pts[i], &pts[j]) <= epsilon {
                forward[i].push(j);
            }
        }
    }

    let mut levels: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); max_order + 1];
    let mut stack: Vec<(Vec<usize>, Vec<usize>)> = (0..n).map(|i| (vec![i], forward[i].clone())).collect();
    while let Some((clique, candidates)) = stack.pop() {
        let order = clique.len() - 1;
        if order < max_order {
            for (pos, &v) in candidates.iter().enumerate() {
                let next_candidates: Vec<usize> =
                    candidates[pos + 1..].iter().copied().filter(|c| forward[v].binary_search(c).is_ok()).collect();
                let mut grown = clique.clone();
                grown.push(v);
                stack.push((grown, next_candidates));
            }
        }
        levels[order].insert(clique);
    }
    Ok(SimplicialComplex::from_levels(levels))
}
