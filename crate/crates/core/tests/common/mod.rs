#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed seed matrix shared by every property suite.
pub const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n x d` matrix of standard uniform entries scaled by `scale`.
pub fn uniform_points(n: usize, d: usize, scale: f64, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, d, |_, _| scale * r.gen::<f64>())
}

/// All-pairs Gaussian kernel by a plain double loop.
pub fn naive_kernel(points: &DMatrix<f64>, epsilon: f64) -> DMatrix<f64> {
    let n = points.nrows();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut d2 = 0.0;
            for c in 0..points.ncols() {
                let diff = points[(i, c)] - points[(j, c)];
                d2 += diff * diff;
            }
            w[(i, j)] = (-d2 / epsilon).exp();
        }
    }
    w
}

/// `I - D^-1 W` built entry by entry.
pub fn random_walk_laplacian(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - w[(i, j)] / deg[i])
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Distance between two unit vectors up to a global sign.
pub fn sign_distance(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Compares a decomposition with a direct solve of the nonsymmetric `L_rw`
/// of `w`: eigenvalues from a real Schur form, eigenvectors from the null
/// space of `L_rw - lambda I` (only for eigenvalues separated by `1e-3`).
/// Returns the largest eigenvalue and sign-adjusted eigenvector errors.
pub fn direct_solve_errors(dec: &manifactor::SpectralDecomposition, w: &DMatrix<f64>) -> (f64, f64) {
    let l = random_walk_laplacian(w);
    let mut direct: Vec<f64> = l
        .complex_eigenvalues()
        .iter()
        .map(|c| {
            assert!(c.im.abs() < 1e-9, "L_rw eigenvalue with imaginary part {}", c.im);
            c.re
        })
        .collect();
    direct.sort_by(f64::total_cmp);

    let (mut value_err, mut vector_err) = (0.0f64, 0.0f64);
    for k in 1..=dec.n_eigs() + 1 {
        let target = direct[k - 1];
        value_err = value_err.max((dec.eigenvalue(k) - target).abs());
        let gap = direct
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k - 1)
            .map(|(_, v)| (v - target).abs())
            .fold(f64::INFINITY, f64::min);
        if gap < 1e-3 {
            continue;
        }
        let shifted = &l - DMatrix::identity(l.nrows(), l.ncols()) * target;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors");
        let null = unit(v_t.row(svd.singular_values.imin()).transpose().as_slice());
        let ours = dec.eigenvector(k).into_owned();
        vector_err = vector_err.max(sign_distance(ours.as_slice(), &null));
    }
    (value_err, vector_err)
}

/// Density-normalized kernel `Q^-1 W Q^-1` by the same plain loops.
pub fn naive_normalized_kernel(points: &DMatrix<f64>, epsilon: f64) -> DMatrix<f64> {
    let w = naive_kernel(points, epsilon);
    let q: Vec<f64> = (0..w.nrows()).map(|i| w.row(i).sum()).collect();
    DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] / (q[i] * q[j]))
}
