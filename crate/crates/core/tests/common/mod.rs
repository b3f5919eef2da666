//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use hodgeflow_core::complex::SimplicialComplex;
use hodgeflow_core::laplacian::{HodgeLaplacian, WeightAssignment};
use hodgeflow_core::linalg::{sym_eigen, sym_eigenvalues};
use hodgeflow_core::sdp::{Coefficient, ConeBlock, LinearEquality, MatrixVariable, SdpProblem, Sense, Term};
use hodgeflow_core::spectral::zero_tolerance;
use hodgeflow_core::vietoris_rips::{build_vietoris_rips, PointCloud};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| gaussian(rng))
}

pub fn random_vr<R: Rng>(rng: &mut R, n: usize, eps: f64, max_order: usize) -> (PointCloud, SimplicialComplex) {
    let cloud = PointCloud::uniform_unit_square(n, rng);
    let complex = build_vietoris_rips(&cloud, eps, max_order).unwrap();
    (cloud, complex)
}

/// Weights drawn log-uniformly from `[0.1, 10]` at every order.
pub fn random_weights<R: Rng>(rng: &mut R, complex: &SimplicialComplex) -> WeightAssignment {
    let per_order = complex
        .counts()
        .into_iter()
        .map(|n| DVector::from_fn(n, |_, _| 10f64.powf(rng.random_range(-1.0..1.0))))
        .collect();
    WeightAssignment::new(complex, per_order).unwrap()
}

/// Every vertex subset of size `<= max_order + 1` whose pairwise distances are all `<= eps`.
pub fn brute_force_vr(points: &[Vec<f64>], eps: f64, max_order: usize) -> Vec<Vec<Vec<usize>>> {
    let n = points.len();
    assert!(n <= 16);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut levels = vec![Vec::new(); max_order + 1];
    for mask in 1u32..(1 << n) {
        let verts: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if verts.len() > max_order + 1 {
            continue;
        }
        let clique =
            verts.iter().enumerate().all(|(a, &i)| verts[a + 1..].iter().all(|&j| dist(&points[i], &points[j]) <= eps));
        if clique {
            levels[verts.len() - 1].push(verts);
        }
    }
    for l in &mut levels {
        l.sort();
    }
    levels
}

/// Signed incidence matrix from the definition, by linear search over the simplex lists.
pub fn reference_boundary(complex: &SimplicialComplex, k: usize) -> DMatrix<f64> {
    let rows: Vec<Vec<usize>> = complex.simplices(k - 1).iter().map(|s| s.vertices().to_vec()).collect();
    let cols: Vec<Vec<usize>> = complex.simplices(k).iter().map(|s| s.vertices().to_vec()).collect();
    let mut b = DMatrix::zeros(rows.len(), cols.len());
    for (j, simplex) in cols.iter().enumerate() {
        for m in 0..simplex.len() {
            let mut face = simplex.clone();
            face.remove(m);
            let i = rows.iter().position(|r| *r == face).expect("face missing");
            b[(i, j)] = if m % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    b
}

/// `(down, up)` weighted Laplacian parts with explicit diagonal matrices and inverses.
pub fn reference_laplacian(
    complex: &SimplicialComplex,
    weights: &WeightAssignment,
    k: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = complex.count(k);
    let wk = DMatrix::from_diagonal(&weights.order(k));
    let wk_inv = wk.clone().try_inverse().unwrap();
    let down = if k >= 1 && complex.count(k - 1) > 0 {
        let b = reference_boundary(complex, k);
        let wl_inv = DMatrix::from_diagonal(&weights.order(k - 1)).try_inverse().unwrap();
        b.transpose() * wl_inv * &b * &wk
    } else {
        DMatrix::zeros(n, n)
    };
    let up = if k < complex.dimension() && complex.count(k + 1) > 0 {
        let b = reference_boundary(complex, k + 1);
        let wu = DMatrix::from_diagonal(&weights.order(k + 1));
        &wk_inv * &b * wu * b.transpose()
    } else {
        DMatrix::zeros(n, n)
    };
    (down, up)
}

/// Classical fixed-step RK4 for `dx/dt = -L x`.
pub fn rk4(l: &DMatrix<f64>, x0: &DVector<f64>, t: f64, steps: usize) -> DVector<f64> {
    let h = t / steps as f64;
    let f = |x: &DVector<f64>| -(l * x);
    let mut x = x0.clone();
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (h / 2.0)));
        let k3 = f(&(&x + &k2 * (h / 2.0)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    a.qr().q()
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    (&a + a.transpose()) * 0.5
}

/// An SDP whose optimal value is known by construction.
pub struct PlantedSdp {
    pub problem: SdpProblem,
    pub optimum: f64,
}

pub struct PlantedShape {
    pub n: usize,
    pub scalars: usize,
    pub lp: usize,
    pub equalities: usize,
    pub matrix_dim: usize,
    /// Rank of `Z*` beyond `matrix_dim`; at least one.
    pub null_rank: usize,
    pub low_rank: bool,
    pub maximize: bool,
}

/// Builds an SDP around a strictly complementary primal–dual pair
/// `(S*, Z*)`, so that the optimum value follows from weak duality.
pub fn planted_sdp<R: Rng>(rng: &mut R, shape: &PlantedShape) -> PlantedSdp {
    let n = shape.n;
    let m = shape.scalars;
    let q = random_orthogonal(rng, n);
    // Z* has rank d = dim(Y) + e. Keeping e(e+1)/2 plus the number of tight
    // non-negative rows within the free scalar count leaves the primal
    // strictly feasible; Z* positive on the Y block keeps the dual strictly feasible.
    let d = shape.matrix_dim + shape.null_rank;
    assert!(d < n, "rank of Z* must leave room for S*");
    let budget = m - shape.equalities;
    assert!(shape.null_rank * (shape.null_rank + 1) / 2 <= budget);
    let mut s_diag = DVector::zeros(n);
    let mut z_diag = DVector::zeros(n);
    for i in 0..n {
        if i < n - d {
            s_diag[i] = rng.random_range(0.5..2.0);
        } else {
            z_diag[i] = rng.random_range(0.5..2.0);
        }
    }
    let s_star = &q * DMatrix::from_diagonal(&s_diag) * q.transpose();
    let z_star = &q * DMatrix::from_diagonal(&z_diag) * q.transpose();

    let coefs: Vec<Coefficient> = (0..m)
        .map(|_| {
            if shape.low_rank && rng.random_bool(0.5) {
                let rank = rng.random_range(1..=2.min(n));
                Coefficient::LowRank {
                    vectors: DMatrix::from_fn(n, rank, |_, _| gaussian(rng)),
                    scales: DVector::from_fn(rank, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 }),
                }
            } else {
                Coefficient::Dense(random_symmetric(rng, n))
            }
        })
        .collect();
    let x_star = gaussian_vector(rng, m);
    let y_dim = shape.matrix_dim;
    let y_star = if y_dim > 0 { random_symmetric(rng, y_dim) } else { DMatrix::zeros(0, 0) };
    let offset = n - y_dim;

    let mut f0 = s_star.clone();
    for (i, c) in coefs.iter().enumerate() {
        f0 -= c.to_dense(n) * x_star[i];
    }
    if y_dim > 0 {
        let mut v = f0.view_mut((offset, offset), (y_dim, y_dim));
        v -= &y_star;
    }
    let f0 = (&f0 + f0.transpose()) * 0.5;

    // Non-negative block with complementary s, z; every row involves some variable.
    let mut lp_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for row in 0..shape.lp {
        let first = rng.random_range(0..m);
        for (i, entries) in lp_entries.iter_mut().enumerate() {
            if i == first || rng.random_bool(0.4) {
                entries.push((row, gaussian(rng)));
            }
        }
    }
    let mut tight_budget = budget - shape.null_rank * (shape.null_rank + 1) / 2;
    let mut lp_s = DVector::zeros(shape.lp);
    let mut lp_z = DVector::zeros(shape.lp);
    for i in 0..shape.lp {
        if tight_budget > 0 && rng.random_bool(0.5) {
            lp_z[i] = rng.random_range(0.5..2.0);
            tight_budget -= 1;
        } else {
            lp_s[i] = rng.random_range(0.5..2.0);
        }
    }
    let mut lp_const = lp_s.clone();
    for (i, entries) in lp_entries.iter().enumerate() {
        for &(row, v) in entries {
            lp_const[row] -= v * x_star[i];
        }
    }

    let g = DMatrix::from_fn(shape.equalities, m, |_, _| gaussian(rng));
    let nu = gaussian_vector(rng, shape.equalities);
    let h = &g * &x_star;

    let gt_nu = g.transpose() * &nu;
    let mut cost = DVector::zeros(m);
    for i in 0..m {
        let fz = hodgeflow_core::linalg::frob_dot(&coefs[i].to_dense(n), &z_star);
        let lz: f64 = lp_entries[i].iter().map(|&(row, v)| v * lp_z[row]).sum();
        cost[i] = fz + lz + gt_nu[i];
    }
    let y_cost =
        if y_dim > 0 { z_star.view((offset, offset), (y_dim, y_dim)).into_owned() } else { DMatrix::zeros(0, 0) };
    let y_cost = (&y_cost + y_cost.transpose()) * 0.5;
    let optimum = cost.dot(&x_star) + hodgeflow_core::linalg::frob_dot(&y_cost, &y_star);

    let sign = if shape.maximize { -1.0 } else { 1.0 };
    let mut problem = SdpProblem::new(if shape.maximize { Sense::Maximize } else { Sense::Minimize });
    let psd = problem.add_block(ConeBlock::Psd { constant: f0 });
    let lp = if shape.lp > 0 { Some(problem.add_block(ConeBlock::Nonneg { constant: lp_const })) } else { None };
    for (i, c) in coefs.into_iter().enumerate() {
        let mut terms = vec![Term { block: psd, coefficient: c }];
        if let Some(lp) = lp {
            if !lp_entries[i].is_empty() {
                terms.push(Term { block: lp, coefficient: Coefficient::Entries(lp_entries[i].clone()) });
            }
        }
        problem.add_scalar(format!("x{i}"), sign * cost[i], terms);
    }
    if y_dim > 0 {
        problem.matrices.push(MatrixVariable { name: "Y".into(), block: psd, offset, dim: y_dim, cost: y_cost * sign });
    }
    for (row, rhs) in h.iter().enumerate() {
        problem.equalities.push(LinearEquality { coefficients: (0..m).map(|i| (i, g[(row, i)])).collect(), rhs: *rhs });
    }
    PlantedSdp { problem, optimum: sign * optimum }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Minimizes `tr((A0 + sum_i w_i a_i a_i^T)^{-1})` over the probability simplex
/// by projected gradient descent with backtracking.
pub fn projected_gradient_trace(a0: &DMatrix<f64>, vectors: &[DVector<f64>], iterations: usize) -> (DVector<f64>, f64) {
    let m = vectors.len();
    let eval = |w: &DVector<f64>| -> Option<(f64, DMatrix<f64>)> {
        let mut a = a0.clone();
        for (i, v) in vectors.iter().enumerate() {
            a += v * v.transpose() * w[i];
        }
        let inv = a.cholesky()?.inverse();
        Some((inv.trace(), inv))
    };
    let mut w = DVector::from_element(m, 1.0 / m as f64);
    let (mut f, mut inv) = eval(&w).unwrap();
    let mut step = 1.0;
    for _ in 0..iterations {
        let inv2 = &inv * &inv;
        let grad = DVector::from_fn(m, |i, _| -(vectors[i].transpose() * &inv2 * &vectors[i])[(0, 0)]);
        let mut accepted = false;
        step *= 2.0;
        while step > 1e-16 {
            let cand = project_simplex(&(&w - &grad * step));
            if let Some((fc, ic)) = eval(&cand) {
                let decrease = grad.dot(&(&cand - &w));
                if fc <= f + 1e-4 * decrease {
                    let done = (f - fc).abs() <= 1e-15 * f.abs();
                    w = cand;
                    f = fc;
                    inv = ic;
                    accepted = !done;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (w, f)
}

/// All compositions of `total` into `parts` strictly positive integers.
pub fn positive_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 1..=total - (parts - 1) {
        for mut rest in positive_compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn tetrahedron_boundary() -> SimplicialComplex {
    SimplicialComplex::build([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]], 2).unwrap()
}

pub fn filled_triangle() -> SimplicialComplex {
    SimplicialComplex::build([[0, 1, 2]], 2).unwrap()
}

/// The symmetric forms of the down and up parts and their spectral relations.
pub fn spectral_relation_residual(c: &SimplicialComplex, w: &WeightAssignment, k: usize) -> f64 {
    let lap = HodgeLaplacian::assemble(c, w, k).unwrap();
    let (ld, vd) = sym_eigen(lap.symmetric_down()).unwrap();
    let (lu, vu) = sym_eigen(lap.symmetric_up()).unwrap();
    let tol_d = zero_tolerance(ld.max());
    let tol_u = zero_tolerance(lu.max());
    let mut worst: f64 = 0.0;
    for i in (0..ld.len()).filter(|&i| ld[i] > tol_d) {
        for j in (0..lu.len()).filter(|&j| lu[j] > tol_u) {
            worst = worst.max(vd.column(i).dot(&vu.column(j)).abs());
        }
    }
    let full = sym_eigenvalues(&lap.symmetric_full()).unwrap();
    let tol = zero_tolerance(full.max());
    let mut union: Vec<f64> = ld.iter().chain(lu.iter()).copied().filter(|&l| l > tol).collect();
    let mut nonzero: Vec<f64> = full.iter().copied().filter(|&l| l > tol).collect();
    union.sort_by(f64::total_cmp);
    nonzero.sort_by(f64::total_cmp);
    assert_eq!(union.len(), nonzero.len());
    for (a, b) in union.iter().zip(&nonzero) {
        worst = worst.max((a - b).abs() / b.max(1.0));
    }
    worst
}
