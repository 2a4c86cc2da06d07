use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Weights below this value are treated as absent edges by the connectivity
/// check.
pub const EDGE_EPS: f64 = 1e-14;

/// Largest subsample used by [`select_epsilon`].
pub const EPSILON_SUBSAMPLE: usize = 2000;

/// Compressed sparse rows, columns sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from per-row `(col, value)` lists.
    pub fn from_rows(n: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[p] = f(i, self.cols[p], self.vals[p]);
            }
        }
        out
    }

    /// `Y^T = (M X)^T` for a row-major block: `xt` is `p x n` column-major,
    /// i.e. column `j` of `xt` is row `j` of `X`.
    pub(crate) fn mul_transposed_block(&self, xt: &DMatrix<f64>) -> DMatrix<f64> {
        let p = xt.nrows();
        let mut yt = DMatrix::zeros(p, self.n);
        let src = xt.as_slice();
        yt.as_mut_slice().par_chunks_mut(p).enumerate().for_each(|(i, out)| {
            for (j, w) in self.row(i) {
                let xj = &src[j * p..(j + 1) * p];
                for (o, x) in out.iter_mut().zip(xj) {
                    *o += w * x;
                }
            }
        });
        yt
    }
}

/// Kernel weight matrix, dense for small clouds and k-nearest-neighbour
/// truncated otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl Weights {
    pub fn n(&self) -> usize {
        match self {
            Weights::Dense(m) => m.nrows(),
            Weights::Sparse(m) => m.n(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Weights::Dense(m) => m[(i, j)],
            Weights::Sparse(m) => m.get(i, j),
        }
    }

    /// Stored entries of row `i` (every entry for the dense form).
    pub fn row(&self, i: usize) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            Weights::Dense(m) => Box::new(m.row(i).iter().copied().enumerate().collect::<Vec<_>>().into_iter()),
            Weights::Sparse(m) => Box::new(m.row(i)),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        match self {
            Weights::Dense(m) => m.row_iter().map(|r| r.sum()).collect(),
            Weights::Sparse(m) => (0..m.n()).map(|i| m.row(i).map(|(_, v)| v).sum()).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Weights::Dense(m) => m.clone(),
            Weights::Sparse(m) => m.to_dense(),
        }
    }

    /// Number of stored (nonzero for the sparse form) entries.
    pub fn nnz(&self) -> usize {
        match self {
            Weights::Dense(m) => m.len(),
            Weights::Sparse(m) => m.nnz(),
        }
    }
}

/// Kernel graph over a point cloud: weights, bandwidth and degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGraph {
    pub(crate) weights: Weights,
    pub(crate) epsilon: f64,
    pub(crate) degrees: Vec<f64>,
    pub(crate) density_normalized: bool,
}

impl KernelGraph {
    /// Wraps an explicit symmetric nonnegative weight matrix.
    pub fn from_weights(weights: Weights, epsilon: f64) -> Result<Self> {
        let n = weights.n();
        if n == 0 {
            return Err(Error::invalid("empty weight matrix"));
        }
        for i in 0..n {
            for (j, w) in weights.row(i) {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::invalid(format!("weight ({i}, {j}) = {w} is not a nonnegative number")));
                }
                if (w - weights.get(j, i)).abs() > 1e-12 {
                    return Err(Error::invalid(format!("weights not symmetric at ({i}, {j})")));
                }
            }
        }
        let degrees = weights.row_sums();
        Ok(Self { weights, epsilon, degrees, density_normalized: false })
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn is_density_normalized(&self) -> bool {
        self.density_normalized
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.weights, Weights::Sparse(_))
    }

    /// Connected components over edges heavier than [`EDGE_EPS`].
    pub fn component_count(&self) -> usize {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = n;
        for i in 0..n {
            for (j, w) in self.weights.row(i) {
                if j > i && w > EDGE_EPS {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                        components -= 1;
                    }
                }
            }
        }
        components
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row-major copy of the points, one contiguous slice per observation.
pub(crate) fn rows_of(points: &DMatrix<f64>) -> Vec<f64> {
    points.transpose().as_slice().to_vec()
}

/// Median of squared pairwise distances over an evenly strided subsample of
/// at most [`EPSILON_SUBSAMPLE`] points, times `multiplier`.
pub fn select_epsilon(points: &DMatrix<f64>, multiplier: f64) -> Result<f64> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::invalid("bandwidth selection needs at least two points"));
    }
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::invalid(format!("epsilon multiplier must be positive, got {multiplier}")));
    }
    let d = points.ncols();
    let m = n.min(EPSILON_SUBSAMPLE);
    let rows = rows_of(points);
    let picks: Vec<usize> = (0..m).map(|i| i * n / m).collect();
    let mut dists: Vec<f64> = picks
        .par_iter()
        .enumerate()
        .flat_map_iter(|(a, &i)| {
            let xi = &rows[i * d..(i + 1) * d];
            let rows = &rows;
            picks[a + 1..].iter().map(move |&j| squared_distance(xi, &rows[j * d..(j + 1) * d]))
        })
        .collect();
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        *dists.select_nth_unstable_by(mid, f64::total_cmp).1
    } else {
        let upper = *dists.select_nth_unstable_by(mid, f64::total_cmp).1;
        let lower = dists[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    if median <= 0.0 {
        return Err(Error::ZeroBandwidth);
    }
    Ok(median * multiplier)
}

/// Gaussian kernel `W_ij = exp(-|x_i - x_j|^2 / epsilon)`.
///
/// With `neighbors = Some(k)` each row keeps its self-weight and its `k`
/// nearest neighbours; the result is symmetrised by elementwise maximum and
/// degrees are computed after truncation.
pub fn pairwise_kernel(points: &DMatrix<f64>, epsilon: f64, neighbors: Option<usize>) -> Result<KernelGraph> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = points.nrows();
    let d = points.ncols();
    let rows = rows_of(points);
    let weights = match neighbors {
        None => {
            let mut w = DMatrix::zeros(n, n);
            let values: Vec<f64> = (0..n * n)
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = (idx % n, idx / n);
                    let d2 = squared_distance(&rows[i * d..(i + 1) * d], &rows[j * d..(j + 1) * d]);
                    (-d2 / epsilon).exp()
                })
                .collect();
            w.as_mut_slice().copy_from_slice(&values);
            Weights::Dense(w)
        }
        Some(k) => {
            if n < 3 || k < 2 || k > n - 1 {
                return Err(Error::invalid(format!("neighbors must lie in [2, n - 1 = {}], got {k}", n.saturating_sub(1))));
            }
            Weights::Sparse(knn_kernel(&rows, n, d, epsilon, k))
        }
    };
    let degrees = weights.row_sums();
    Ok(KernelGraph { weights, epsilon, degrees, density_normalized: false })
}

fn knn_kernel(rows: &[f64], n: usize, d: usize, epsilon: f64, k: usize) -> CsrMatrix {
    let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        // one scratch buffer per worker; the kept list is a fresh k-sized
        // allocation so memory stays O(n k)
        .map_init(Vec::new, |cand: &mut Vec<(f64, usize)>, i| {
            let xi = &rows[i * d..(i + 1) * d];
            cand.clear();
            cand.extend(
                (0..n).filter(|&j| j != i).map(|j| (squared_distance(xi, &rows[j * d..(j + 1) * d]), j)),
            );
            cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand[..k].iter().map(|&(d2, j)| (j, (-d2 / epsilon).exp())).collect()
        })
        .collect();

    let mut entries: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 1.0)]).collect();
    for (i, list) in neighbours.iter().enumerate() {
        for &(j, w) in list {
            entries[i].push((j, w));
            entries[j].push((i, w));
        }
    }
    for row in entries.iter_mut() {
        row.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
        row.dedup_by_key(|e| e.0);
    }
    CsrMatrix::from_rows(n, entries)
}

/// `W' = Q^-1 W Q^-1` with `Q = diag(row sums of W)`, which removes the
/// sampling-density drift from the limiting operator.
pub fn density_normalize(graph: &KernelGraph) -> Result<KernelGraph> {
    if graph.density_normalized {
        return Err(Error::invalid("graph is already density-normalized"));
    }
    let q = graph.weights.row_sums();
    if let Some(index) = q.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DisconnectedPoint { index });
    }
    let weights = match &graph.weights {
        Weights::Dense(w) => Weights::Dense(DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] / (q[i] * q[j]))),
        Weights::Sparse(w) => Weights::Sparse(w.map_values(|i, j, v| v / (q[i] * q[j]))),
    };
    let degrees = weights.row_sums();
    Ok(KernelGraph { weights, epsilon: graph.epsilon, degrees, density_normalized: true })
}
