//! Simplices, simplicial complexes and signed boundary matrices.
//!
//! Simplices are stored with their vertices in ascending order, and that
//! ordering is the orientation used everywhere. Within each order the
//! simplices are indexed lexicographically by vertex tuple, which fixes the
//! row and column order of every boundary matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An oriented simplex on non-negative integer vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(Vec<usize>);

impl Simplex {
    /// Builds a simplex from any vertex ordering; the stored orientation is ascending.
    pub fn new(mut vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidSimplex { vertices, reason: "empty vertex set".into() });
        }
        let original = vertices.clone();
        vertices.sort_unstable();
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSimplex { vertices: original, reason: "repeated vertex".into() });
        }
        Ok(Simplex(vertices))
    }

    pub(crate) fn from_sorted(vertices: Vec<usize>) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        Simplex(vertices)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// The `k + 1` codimension-one faces together with their incidence sign.
    ///
    /// Deleting the vertex at position `m` of the ascending ordering yields a
    /// face with sign `(-1)^m`.
    pub fn faces(&self) -> impl Iterator<Item = (Simplex, i8)> + '_ {
        let n = if self.0.len() > 1 { self.0.len() } else { 0 };
        (0..n).map(move |m| {
            let mut face = self.0.clone();
            face.remove(m);
            let sign = if m % 2 == 0 { 1 } else { -1 };
            (Simplex(face), sign)
        })
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// A finite simplicial complex, closed under taking faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    simplices: Vec<Vec<Simplex>>,
    index: Vec<HashMap<Simplex, usize>>,
}

impl SimplicialComplex {
    /// Closes `simplex_list` under inclusion and truncates it to `max_order`.
    ///
    /// Duplicate simplices are merged silently. A vertex set with a repeated
    /// vertex is rejected.
    pub fn build<I, S>(simplex_list: I, max_order: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[usize]>,
    {
        let mut levels: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); max_order + 1];
        for raw in simplex_list {
            let simplex = Simplex::new(raw.as_ref().to_vec())?;
            insert_skeleton(&mut levels, simplex.0, max_order);
        }
        Ok(Self::from_levels(levels))
    }

    /// Builds a complex from per-order sets that are already closed under inclusion.
    pub(crate) fn from_levels(mut levels: Vec<BTreeSet<Vec<usize>>>) -> Self {
        while levels.len() > 1 && levels.last().is_some_and(BTreeSet::is_empty) {
            levels.pop();
        }
        if levels.is_empty() {
            levels.push(BTreeSet::new());
        }
        let simplices: Vec<Vec<Simplex>> =
            levels.into_iter().map(|set| set.into_iter().map(Simplex::from_sorted).collect()).collect();
        let index =
            simplices.iter().map(|level| level.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()).collect();
        SimplicialComplex { simplices, index }
    }

    /// Highest order with at least one simplex (0 for an empty complex).
    pub fn dimension(&self) -> usize {
        self.simplices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.simplices[0].is_empty()
    }

    /// Number of `k`-simplices, zero beyond the dimension.
    pub fn count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    /// Simplex counts for orders `0..=dimension`.
    pub fn counts(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    pub fn simplices(&self, k: usize) -> &[Simplex] {
        self.simplices.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn index_of(&self, simplex: &Simplex) -> Option<usize> {
        self.index.get(simplex.order())?.get(simplex).copied()
    }

    pub fn contains(&self, simplex: &Simplex) -> bool {
        self.index_of(simplex).is_some()
    }

    /// Checks that every face of every stored simplex is stored.
    pub fn is_closed(&self) -> bool {
        self.simplices.iter().flatten().all(|s| s.faces().all(|(face, _)| self.contains(&face)))
    }

    /// Signed incidence matrix between orders `k - 1` and `k`, for `1 <= k <= dimension`.
    pub fn boundary_matrix(&self, k: usize) -> Result<BoundaryMatrix> {
        if k == 0 || k > self.dimension() {
            return Err(Error::OrderOutOfRange { order: k, min: 1, max: self.dimension() });
        }
        Ok(self.boundary_unchecked(k))
    }

    /// Like [`boundary_matrix`](Self::boundary_matrix), but returns the zero
    /// matrix of the right shape for `k = 0` and `k = dimension + 1`.
    pub fn boundary_or_zero(&self, k: usize) -> BoundaryMatrix {
        if k == 0 || k > self.dimension() {
            BoundaryMatrix {
                order: k,
                rows: if k == 0 { 0 } else { self.count(k - 1) },
                cols: self.count(k),
                entries: Vec::new(),
            }
        } else {
            self.boundary_unchecked(k)
        }
    }

    fn boundary_unchecked(&self, k: usize) -> BoundaryMatrix {
        let mut entries = Vec::with_capacity(self.count(k) * (k + 1));
        for (col, simplex) in self.simplices[k].iter().enumerate() {
            for (face, sign) in simplex.faces() {
                let row = self.index[k - 1][&face];
                entries.push((row, col, sign));
            }
        }
        entries.sort_unstable();
        BoundaryMatrix { order: k, rows: self.count(k - 1), cols: self.count(k), entries }
    }

    pub fn to_json_value(&self) -> ComplexJson {
        let simplices = self
            .simplices
            .iter()
            .enumerate()
            .map(|(k, level)| (k.to_string(), level.iter().map(|s| s.vertices().to_vec()).collect()))
            .collect();
        ComplexJson { dimension: self.dimension(), simplices }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }

    /// Parses the complex JSON document; missing faces are added by closure.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ComplexJson = serde_json::from_str(text)?;
        let mut all = Vec::new();
        for (key, level) in &doc.simplices {
            let k: usize = key.parse().map_err(|_| Error::Parse(format!("order key {key:?} is not an integer")))?;
            for s in level {
                if s.len() != k + 1 {
                    return Err(Error::Parse(format!("simplex {s:?} listed under order {k} has {} vertices", s.len())));
                }
                all.push(s.clone());
            }
        }
        Self::build(all, doc.dimension)
    }
}

fn insert_skeleton(levels: &mut [BTreeSet<Vec<usize>>], vertices: Vec<usize>, max_order: usize) {
    let order = vertices.len() - 1;
    if order > max_order {
        // Only faces of order <= max_order survive.
        for m in 0..vertices.len() {
            let mut face = vertices.clone();
            face.remove(m);
            insert_skeleton(levels, face, max_order);
        }
        return;
    }
    if !levels[order].insert(vertices.clone()) || order == 0 {
        return;
    }
    for m in 0..vertices.len() {
        let mut face = vertices.clone();
        face.remove(m);
        insert_skeleton(levels, face, max_order);
    }
}

/// On-disk form of a complex: `{"dimension": K, "simplices": {"0": [[v], ...], ...}}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ComplexJson {
    pub dimension: usize,
    pub simplices: BTreeMap<String, Vec<Vec<usize>>>,
}

/// Signed incidence matrix `B_k` of shape `D_{k-1} x D_k`, stored as triplets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMatrix {
    order: usize,
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, i8)>,
}

impl BoundaryMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Non-zero entries as `(row, col, sign)`, sorted by row then column.
    pub fn entries(&self) -> &[(usize, usize, i8)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(i, j, s) in &self.entries {
            m[(i, j)] = f64::from(s);
        }
        m
    }

    /// Exact integer product `self * rhs`, returned as its non-zero entries.
    pub fn product_nonzeros(&self, rhs: &BoundaryMatrix) -> BTreeMap<(usize, usize), i64> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); rhs.rows];
        for &(i, j, s) in &rhs.entries {
            by_row[i].push((j, i64::from(s)));
        }
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(i, mid, s) in &self.entries {
            for &(j, t) in &by_row[mid] {
                *acc.entry((i, j)).or_insert(0) += i64::from(s) * t;
            }
        }
        acc.retain(|_, v| *v != 0);
        acc
    }

    /// Number of non-zero entries in each column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for &(_, j, _) in &self.entries {
            counts[j] += 1;
        }
        counts
    }
}
