//! Product-eigenvector search.
//!
//! For every eigenvector `phi_k` the scan looks for the pair `i < j < k` whose
//! elementwise product `phi_i * phi_j` is most similar to `phi_k` (absolute
//! cosine similarity). Pairs whose eigenvalues do not add up,
//! `|lambda_i + lambda_j - lambda_k| >= delta`, are skipped without computing
//! the product. A triplet is kept only when its best similarity exceeds
//! `gamma`, so each `k` yields at most one triplet.
//!
//! Indices are 1-based with index 1 the trivial eigenvector, which never
//! takes part: a product with a constant vector is a rescaled copy and would
//! match with score 1.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;

/// Norms below this are treated as zero and give similarity 0.
pub const NORM_FLOOR: f64 = 1e-14;

/// `phi_k ~ phi_i * phi_j` with its similarity and eigenvalue mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub score: f64,
    pub eig_gap: f64,
}

/// How the eigenvalue criterion threshold is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// `|lambda_i + lambda_j - lambda_k| < delta` in raw eigenvalue units.
    #[default]
    Raw,
    /// The gap divided by `lambda_2` (first nontrivial eigenvalue).
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationParams {
    pub delta: f64,
    pub gamma: f64,
    pub n_eigs: usize,
    #[serde(default)]
    pub delta_mode: DeltaMode,
}

impl FactorizationParams {
    pub fn new(delta: f64, gamma: f64, n_eigs: usize) -> Result<Self> {
        let p = Self { delta, gamma, n_eigs, delta_mode: DeltaMode::Raw };
        p.validate()?;
        Ok(p)
    }

    pub fn relative(mut self) -> Self {
        self.delta_mode = DeltaMode::Relative;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::invalid(format!("delta must be > 0, got {}", self.delta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Output of [`find_triplets`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletList {
    pub triplets: Vec<Triplet>,
    /// Number of eigenvectors searched (`N`).
    pub n_eigs: usize,
    /// Pairs that passed the eigenvalue criterion and were scored.
    pub visited_pairs: u64,
}

impl TripletList {
    pub fn new(triplets: Vec<Triplet>, n_eigs: usize) -> Self {
        Self { triplets, n_eigs, visited_pairs: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }
}

/// Raw data for one candidate pair of a fixed `k`, no thresholds applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionPoint {
    pub i: usize,
    pub j: usize,
    pub eig_gap: f64,
    pub score: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let o = c * 4;
        for l in 0..4 {
            acc[l] += a[o + l] * b[o + l];
        }
    }
    let mut tail = 0.0;
    for l in chunks * 4..a.len() {
        tail += a[l] * b[l];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `|<u, v>| / (|u| |v|)`, or 0 when either norm is below [`NORM_FLOOR`].
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!("vector lengths differ: {} vs {}", u.len(), v.len())));
    }
    let (nu, nv) = (dot(u, u).sqrt(), dot(v, v).sqrt());
    if nu < NORM_FLOOR || nv < NORM_FLOOR {
        return Ok(0.0);
    }
    Ok((dot(u, v).abs() / (nu * nv)).min(1.0))
}

/// Similarity between `target` and the elementwise product `a * b`; exactly
/// symmetric in `a` and `b`.
pub fn product_similarity(target: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("factor vectors differ in length"));
    }
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    cosine_similarity(target, &prod)
}

/// Column views of the eigenvector matrix as contiguous slices (column
/// `c` is eigenvector `c + 1`).
fn columns(dec: &SpectralDecomposition) -> Vec<&[f64]> {
    let n = dec.n_points();
    dec.eigenvectors().as_slice().chunks(n).collect()
}

struct Scanner<'a> {
    cols: Vec<&'a [f64]>,
    lambdas: &'a [f64],
    norms: Vec<f64>,
    /// `|phi_i * phi_j|^2` for every pair, via the Gram matrix of squares.
    product_norms: DMatrix<f64>,
}

impl<'a> Scanner<'a> {
    fn new(dec: &'a SpectralDecomposition, upto: usize) -> Self {
        let cols = columns(dec);
        let n = dec.n_points();
        let norms = cols.iter().map(|c| dot(c, c).sqrt()).collect();
        let squares = DMatrix::from_fn(n, upto, |r, c| cols[c][r] * cols[c][r]);
        let product_norms = squares.tr_mul(&squares).map(|v| v.max(0.0).sqrt());
        Self { cols, lambdas: dec.eigenvalues(), norms, product_norms }
    }

    fn gap(&self, i: usize, j: usize, k: usize) -> f64 {
        (self.lambdas[i - 1] + self.lambdas[j - 1] - self.lambdas[k - 1]).abs()
    }

    /// Scores every pair `i < j < k` accepted by `accept`, calling `visit`
    /// in `(i, j)` lexicographic order.
    fn scan(&self, k: usize, accept: impl Fn(f64) -> bool, mut visit: impl FnMut(usize, usize, f64, f64)) {
        let target = self.cols[k - 1];
        let nk = self.norms[k - 1];
        let mut weighted = vec![0.0; target.len()];
        for i in 2..k {
            let mut ready = false;
            for j in i + 1..k {
                let gap = self.gap(i, j, k);
                if !accept(gap) {
                    continue;
                }
                if !ready {
                    for ((w, t), x) in weighted.iter_mut().zip(target).zip(self.cols[i - 1]) {
                        *w = t * x;
                    }
                    ready = true;
                }
                let den = nk * self.product_norms[(i - 1, j - 1)];
                let score = if nk < NORM_FLOOR || self.product_norms[(i - 1, j - 1)] < NORM_FLOOR {
                    0.0
                } else {
                    (dot(&weighted, self.cols[j - 1]).abs() / den).min(1.0)
                };
                visit(i, j, gap, score);
            }
        }
    }
}

/// Best product factorization of each eigenvector `phi_3 .. phi_{N+1}`.
///
/// Ties keep the first pair found (`i` ascending, then `j`), and a pair must
/// strictly improve on the running maximum, which starts at 0.
pub fn find_triplets(dec: &SpectralDecomposition, params: &FactorizationParams) -> Result<TripletList> {
    params.validate()?;
    if params.n_eigs > dec.n_eigs() {
        return Err(Error::invalid(format!(
            "{} eigenvectors requested but the decomposition holds {}",
            params.n_eigs,
            dec.n_eigs()
        )));
    }
    let last = params.n_eigs + 1;
    let scanner = Scanner::new(dec, last);
    let scale = match params.delta_mode {
        DeltaMode::Raw => 1.0,
        DeltaMode::Relative => {
            let l2 = if last >= 2 { dec.eigenvalue(2) } else { 1.0 };
            if !(l2 > 0.0) {
                return Err(Error::invalid("relative delta needs a positive second eigenvalue"));
            }
            l2
        }
    };
    let threshold = params.delta * scale;

    let per_k: Vec<(Option<Triplet>, u64)> = (3..=last)
        .into_par_iter()
        .map(|k| {
            let mut best: Option<Triplet> = None;
            let mut max_score = 0.0;
            let mut visited = 0u64;
            scanner.scan(
                k,
                |gap| gap < threshold,
                |i, j, gap, score| {
                    visited += 1;
                    if score > max_score {
                        max_score = score;
                        best = Some(Triplet { i, j, k, score, eig_gap: gap });
                    }
                },
            );
            (best.filter(|t| t.score > params.gamma), visited)
        })
        .collect();

    let visited_pairs = per_k.iter().map(|(_, v)| v).sum();
    let triplets = per_k.into_iter().filter_map(|(t, _)| t).collect();
    Ok(TripletList { triplets, n_eigs: params.n_eigs, visited_pairs })
}

/// Eigenvalue gap and similarity of every pair `2 <= i < j < k`.
pub fn criterion_scatter(dec: &SpectralDecomposition, k: usize) -> Result<Vec<CriterionPoint>> {
    if k < 2 || k > dec.n_eigs() + 1 {
        return Err(Error::Index { index: k, valid: format!("2..={}", dec.n_eigs() + 1) });
    }
    let scanner = Scanner::new(dec, k);
    let mut out = Vec::with_capacity((k - 2) * k.saturating_sub(3) / 2);
    scanner.scan(k, |_| true, |i, j, eig_gap, score| out.push(CriterionPoint { i, j, eig_gap, score }));
    Ok(out)
}
