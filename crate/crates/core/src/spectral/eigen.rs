//! Smallest eigenpairs of the symmetric normalized Laplacian
//! `L_sym = I - D^{-1/2} W D^{-1/2}`.
//!
//! Small problems use a dense symmetric eigendecomposition. Large ones use
//! Chebyshev-filtered subspace iteration: a polynomial in `L_sym` damps the
//! unwanted part of the spectrum `[a, b]`, followed by orthonormalization and
//! a Rayleigh-Ritz step. Converged leading pairs are locked and deflated.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::kernel::{CsrMatrix, KernelGraph, Weights};
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub solver: SolverKind,
    /// Residual tolerance `|L_sym u - theta u|` for unit `u`.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of the random starting block.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { solver: SolverKind::Auto, tol: 1e-10, max_iter: 400, seed: 0 }
    }
}

/// Problems up to this size always go to the dense solver under `Auto`.
const DENSE_AUTO_MAX: usize = 800;

/// Dense kernels sparser than this fraction are applied in CSR form.
const DENSE_TO_SPARSE_FILL: f64 = 0.3;

/// `x -> L_sym x` on `n x p` column-major blocks.
pub(crate) struct LaplacianOp {
    inv_sqrt_deg: DVector<f64>,
    weights: OpWeights,
}

enum OpWeights {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl LaplacianOp {
    pub(crate) fn new(graph: &KernelGraph) -> Self {
        let inv_sqrt_deg = DVector::from_iterator(graph.n(), graph.degrees().iter().map(|d| 1.0 / d.sqrt()));
        let weights = match graph.weights() {
            Weights::Sparse(m) => OpWeights::Sparse(m.clone()),
            Weights::Dense(m) => {
                let n = m.nrows();
                // entries this small change eigenvalues by at most n * 1e-18
                let kept = m.iter().filter(|&&v| v > 1e-18).count();
                if (kept as f64) < DENSE_TO_SPARSE_FILL * (n * n) as f64 {
                    let rows = (0..n)
                        .map(|i| (0..n).filter(|&j| m[(i, j)] > 1e-18).map(|j| (j, m[(i, j)])).collect())
                        .collect();
                    OpWeights::Sparse(CsrMatrix::from_rows(n, rows))
                } else {
                    OpWeights::Dense(m.clone())
                }
            }
        };
        Self { inv_sqrt_deg, weights }
    }

    pub(crate) fn n(&self) -> usize {
        self.inv_sqrt_deg.len()
    }

    pub(crate) fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut scaled = x.clone();
        for mut col in scaled.column_iter_mut() {
            col.component_mul_assign(&self.inv_sqrt_deg);
        }
        let mut wx = match &self.weights {
            OpWeights::Dense(w) => w * &scaled,
            OpWeights::Sparse(w) => w.mul_transposed_block(&scaled.transpose()).transpose(),
        };
        for mut col in wx.column_iter_mut() {
            col.component_mul_assign(&self.inv_sqrt_deg);
        }
        x - wx
    }

    pub(crate) fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let w = match &self.weights {
            OpWeights::Dense(w) => w.clone(),
            OpWeights::Sparse(w) => w.to_dense(),
        };
        let s = &self.inv_sqrt_deg;
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - s[i] * w[(i, j)] * s[j])
    }
}

/// Result of an eigensolve: ascending values, unit eigenvectors as columns.
pub(crate) struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub max_residual: f64,
}

pub(crate) fn smallest_eigenpairs(op: &LaplacianOp, k: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = op.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot compute {k} eigenpairs of a {n} x {n} operator")));
    }
    let block = block_size(n, k);
    let dense = match opts.solver {
        SolverKind::Dense => true,
        SolverKind::Chebyshev => block >= n,
        SolverKind::Auto => n <= DENSE_AUTO_MAX || block * 3 > n,
    };
    if dense {
        dense_smallest(op, k)
    } else {
        chebyshev_smallest(op, k, block, opts)
    }
}

fn block_size(n: usize, k: usize) -> usize {
    (k + (k / 4).max(12)).min(n)
}

fn dense_smallest(op: &LaplacianOp, k: usize) -> Result<EigenPairs> {
    let eig = SymmetricEigen::new(op.dense_matrix());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(op.n(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    let max_residual = residuals(op, &vectors, &values).into_iter().fold(0.0, f64::max);
    Ok(EigenPairs { values, vectors, max_residual })
}

fn residuals(op: &LaplacianOp, vectors: &DMatrix<f64>, values: &[f64]) -> Vec<f64> {
    let lv = op.apply(vectors);
    values
        .iter()
        .enumerate()
        .map(|(c, &v)| (lv.column(c) - vectors.column(c) * v).norm())
        .collect()
}

/// Upper bound on the spectrum from a short Lanczos run (largest Ritz value
/// plus the last off-diagonal), capped at 2, the bound for `L_sym`.
fn spectrum_upper_bound(op: &LaplacianOp, seed: u64) -> f64 {
    let n = op.n();
    let steps = 40.min(n);
    let mut rng = substream(seed, "spectral/lanczos-bound");
    let mut v = DMatrix::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng));
    v /= v.norm();
    let mut prev = DMatrix::zeros(n, 1);
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut beta = 0.0;
    for _ in 0..steps {
        let mut w = op.apply(&v) - &prev * beta;
        let alpha = w.dot(&v);
        w -= &v * alpha;
        alphas.push(alpha);
        beta = w.norm();
        betas.push(beta);
        if beta < 1e-12 {
            break;
        }
        prev = std::mem::replace(&mut v, w / beta);
    }
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let top = SymmetricEigen::new(t).eigenvalues.max();
    (1.01 * (top + betas.last().copied().unwrap_or(0.0))).min(2.0)
}

/// Scaled Chebyshev filter of degree `m` damping `[a, b]`, normalized to
/// roughly unit gain at `a0 < a`.
fn chebyshev_filter(op: &LaplacianOp, x: &DMatrix<f64>, m: usize, a: f64, b: f64, a0: f64) -> DMatrix<f64> {
    let e = (b - a) / 2.0;
    let c = (b + a) / 2.0;
    let mut sigma = e / (a0 - c);
    let tau = 2.0 / sigma;
    let mut prev = x.clone();
    let mut cur = (op.apply(x) - x * c) * (sigma / e);
    for _ in 1..m {
        let sigma_next = 1.0 / (tau - sigma);
        let next = (op.apply(&cur) - &cur * c) * (2.0 * sigma_next / e) - &prev * (sigma * sigma_next);
        prev = cur;
        cur = next;
        sigma = sigma_next;
    }
    cur
}

fn growth(x: f64, a: f64, b: f64) -> f64 {
    let t = ((x - (a + b) / 2.0) / ((b - a) / 2.0)).abs();
    if t > 1.0 {
        t.acosh()
    } else {
        0.0
    }
}

/// Removes the span of `basis` (orthonormal columns) from `y`, twice.
fn deflate(y: &mut DMatrix<f64>, basis: &DMatrix<f64>) {
    if basis.ncols() == 0 {
        return;
    }
    for _ in 0..2 {
        let coeff = basis.tr_mul(y);
        *y -= basis * coeff;
    }
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    let mut q = y.qr().q();
    // a second pass restores orthogonality lost to cancellation
    q = q.qr().q();
    q
}

fn chebyshev_smallest(op: &LaplacianOp, k: usize, block: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = op.n();
    let upper = spectrum_upper_bound(op, opts.seed);
    let mut rng = substream(opts.seed, "spectral/start-block");
    let start = DMatrix::from_fn(n, block, |_, _| StandardNormal.sample(&mut rng));

    let mut locked = DMatrix::<f64>::zeros(n, 0);
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut active = orthonormalize(start);
    let mut ritz = rayleigh_ritz(op, &active);
    let mut worst = f64::INFINITY;

    for _ in 0..opts.max_iter {
        let (vecs, vals, lvecs) = ritz;
        let want = k - locked_vals.len();
        // lock the converged prefix
        let mut newly = 0;
        worst = 0.0;
        for c in 0..want {
            let r = (lvecs.column(c) - vecs.column(c) * vals[c]).norm();
            if r <= opts.tol && newly == c {
                newly += 1;
            } else {
                worst = f64::max(worst, r);
            }
        }
        if newly > 0 {
            locked = stack_columns(&locked, &vecs.columns(0, newly).into_owned());
            locked_vals.extend_from_slice(&vals[..newly]);
        }
        if locked_vals.len() >= k {
            return Ok(finish(op, locked, locked_vals, k));
        }
        let remaining = vecs.columns(newly, vecs.ncols() - newly).into_owned();
        let active_vals = &vals[newly..];

        let a = *active_vals.last().unwrap();
        let a0 = active_vals[0].min(a - 1e-12);
        let b = upper.max(a + 1e-6);
        let edge = active_vals[(k - locked_vals.len() - 1).min(active_vals.len() - 1)];
        let g_edge = growth(edge, a, b).max(1e-3);
        let g_low = growth(a0, a, b);
        let degree_conv = (8.0 / g_edge).ceil();
        let degree_cap = (23.0 / (g_low - g_edge).max(1e-9)).floor();
        let degree = degree_conv.min(degree_cap).clamp(4.0, 120.0) as usize;

        let mut y = chebyshev_filter(op, &remaining, degree, a, b, a0);
        deflate(&mut y, &locked);
        active = orthonormalize(y);
        deflate(&mut active, &locked);
        active = orthonormalize(active);
        ritz = rayleigh_ritz(op, &active);
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: worst })
}

fn stack_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Ritz vectors, values (ascending) and `L` applied to the vectors.
fn rayleigh_ritz(op: &LaplacianOp, q: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let lq = op.apply(q);
    let mut h = q.tr_mul(&lq);
    h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let z = DMatrix::from_fn(order.len(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (q * &z, vals, lq * z)
}

fn finish(op: &LaplacianOp, locked: DMatrix<f64>, vals: Vec<f64>, k: usize) -> EigenPairs {
    // locking order follows convergence; a final Rayleigh-Ritz restores
    // ascending order and mixes nearly degenerate pairs consistently
    let (vecs, values, lvecs) = rayleigh_ritz(op, &locked);
    debug_assert_eq!(vals.len(), values.len());
    let vectors = vecs.columns(0, k).into_owned();
    let values: Vec<f64> = values[..k].to_vec();
    let max_residual = (0..k)
        .map(|c| (lvecs.column(c) - vectors.column(c) * values[c]).norm())
        .fold(0.0, f64::max);
    EigenPairs { values, vectors, max_residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::pairwise_kernel;

    fn cloud(n: usize) -> DMatrix<f64> {
        let mut rng = substream(11, "test/cloud");
        DMatrix::from_fn(n, 2, |_, _| rand::Rng::gen_range(&mut rng, 0.0..1.0))
    }

    #[test]
    fn chebyshev_matches_dense() {
        let pts = cloud(400);
        let g = pairwise_kernel(&pts, 0.02, Some(20)).unwrap();
        let op = LaplacianOp::new(&g);
        let dense = dense_smallest(&op, 12).unwrap();
        let opts = EigenOptions { solver: SolverKind::Chebyshev, ..Default::default() };
        let cheb = chebyshev_smallest(&op, 12, block_size(400, 12), &opts).unwrap();
        for (a, b) in dense.values.iter().zip(&cheb.values) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(cheb.max_residual < 1e-9);
    }

    #[test]
    fn upper_bound_covers_spectrum() {
        let pts = cloud(200);
        let g = pairwise_kernel(&pts, 0.05, Some(10)).unwrap();
        let op = LaplacianOp::new(&g);
        let top = SymmetricEigen::new(op.dense_matrix()).eigenvalues.max();
        assert!(spectrum_upper_bound(&op, 0) >= top - 1e-12);
    }
}
