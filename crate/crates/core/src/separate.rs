//! Separability matrix and Max-Cut partition of factor eigenvectors.
//!
//! Every triplet `(i, j, k)` says that `phi_i` and `phi_j` belong to
//! different factors. Entry `C[i][j]` of the separability matrix holds the
//! score of that evidence, and a maximum cut of `C + C^T` splits the factor
//! eigenvectors into two groups.
//!
//! Small instances (`T <= 24`) are cut exactly by enumeration. Larger ones use
//! a rank-`r` factorization of the semidefinite relaxation, ascended on the
//! product of unit spheres, followed by random-hyperplane rounding.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, RowDVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::TripletList;
use crate::rng::substream;

/// Largest instance the exact solver accepts.
pub const EXACT_LIMIT: usize = 24;

/// Upper-triangular score matrix over the factor eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityMatrix {
    scores: DMatrix<f64>,
    index_map: Vec<usize>,
}

impl SeparabilityMatrix {
    /// Wraps an upper-triangular nonnegative matrix. `index_map[l]` is the
    /// eigenvector index of local node `l`; it must be strictly increasing.
    pub fn from_upper(scores: DMatrix<f64>, index_map: Vec<usize>) -> Result<Self> {
        let t = scores.nrows();
        if scores.ncols() != t || index_map.len() != t {
            return Err(Error::invalid(format!(
                "separability matrix is {}x{} with {} indices",
                scores.nrows(),
                scores.ncols(),
                index_map.len()
            )));
        }
        if index_map.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("index map must be strictly increasing"));
        }
        for r in 0..t {
            for c in 0..t {
                let v = scores[(r, c)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!("score ({r}, {c}) = {v} is not a nonnegative number")));
                }
                if c <= r && v != 0.0 {
                    return Err(Error::invalid(format!("entry ({r}, {c}) lies on or below the diagonal")));
                }
            }
        }
        Ok(Self { scores, index_map })
    }

    /// Number of factor eigenvectors `T`.
    pub fn size(&self) -> usize {
        self.index_map.len()
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    /// `C + C^T`, the matrix the cut is taken on.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        &self.scores + self.scores.transpose()
    }

    /// `sum_{a in A, b not in A} (C + C^T)_{ab}`; `in_a[l]` marks local node `l`.
    pub fn cut_value(&self, in_a: &[bool]) -> f64 {
        let t = self.size();
        let mut total = 0.0;
        for r in 0..t {
            for c in r + 1..t {
                if in_a[r] != in_a[c] {
                    total += self.scores[(r, c)];
                }
            }
        }
        total
    }

    /// Same scores multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid(format!("scale factor must be positive, got {factor}")));
        }
        Ok(Self { scores: &self.scores * factor, index_map: self.index_map.clone() })
    }
}

/// Collects the factor indices of all triplets and records, for every
/// factor pair, the best score among triplets using it.
pub fn build_separability(triplets: &TripletList) -> Result<SeparabilityMatrix> {
    if triplets.is_empty() {
        return Err(Error::EmptyTriplets);
    }
    let factors: BTreeSet<usize> = triplets.triplets.iter().flat_map(|t| [t.i, t.j]).collect();
    let index_map: Vec<usize> = factors.into_iter().collect();
    let local: BTreeMap<usize, usize> = index_map.iter().enumerate().map(|(l, &e)| (e, l)).collect();
    let t = index_map.len();
    let mut scores = DMatrix::zeros(t, t);
    for tr in &triplets.triplets {
        let (a, b) = (local[&tr.i], local[&tr.j]);
        let (r, c) = (a.min(b), a.max(b));
        let v = tr.score.clamp(0.0, 1.0);
        if v > scores[(r, c)] {
            scores[(r, c)] = v;
        }
    }
    SeparabilityMatrix::from_upper(scores, index_map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutMethod {
    Exact,
    SdpRounded,
}

/// Two groups of factor eigenvectors, plus the product eigenvectors and the
/// indices that took part in no triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorAssignment {
    pub group_a: Vec<usize>,
    pub group_b: Vec<usize>,
    pub products: Vec<usize>,
    pub unassigned: Vec<usize>,
    pub cut_value: f64,
    pub method: CutMethod,
    /// Relaxation objective reached by the SDP solver.
    pub sdp_value: Option<f64>,
    pub seed: Option<u64>,
}

impl FactorAssignment {
    pub fn factors(&self) -> [&[usize]; 2] {
        [&self.group_a, &self.group_b]
    }

    fn from_mask(matrix: &SeparabilityMatrix, in_a: &[bool], method: CutMethod) -> Self {
        // canonical orientation: the smallest index sits in group A
        let flip = !in_a.first().copied().unwrap_or(true);
        let (mut group_a, mut group_b) = (Vec::new(), Vec::new());
        for (l, &e) in matrix.index_map.iter().enumerate() {
            if in_a[l] != flip {
                group_a.push(e);
            } else {
                group_b.push(e);
            }
        }
        Self {
            group_a,
            group_b,
            products: Vec::new(),
            unassigned: Vec::new(),
            cut_value: matrix.cut_value(in_a),
            method,
            sdp_value: None,
            seed: None,
        }
    }
}

/// `true` when the sorted member list of `a` precedes that of `b`.
fn lex_less(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    if diff == 0 {
        return false;
    }
    let x = diff.trailing_zeros();
    let above = !((2u64 << x) - 1) as u32;
    if a & (1 << x) != 0 {
        b & above != 0
    } else {
        a & above == 0
    }
}

/// Exhaustive Max-Cut over the `2^(T-1)` bipartitions with node 0 in group
/// A. Among optimal cuts the lexicographically smallest group A wins.
pub fn max_cut_exact(matrix: &SeparabilityMatrix) -> Result<FactorAssignment> {
    let t = matrix.size();
    if t > EXACT_LIMIT {
        return Err(Error::TooLarge { size: t, limit: EXACT_LIMIT });
    }
    if t == 0 {
        return Err(Error::EmptyTriplets);
    }
    let m = matrix.symmetrized();
    let total: f64 = matrix.scores.iter().sum();
    let tol = 1e-12 * total.max(f64::MIN_POSITIVE);
    let exact_cut = |mask: u32| -> f64 {
        let mut s = 0.0;
        for r in 0..t {
            for c in r + 1..t {
                if (mask >> r & 1) != (mask >> c & 1) {
                    s += m[(r, c)];
                }
            }
        }
        s
    };

    // Gray-code walk over nodes 1..t; bit set means "in group A"
    let all_a: u32 = 1;
    let mut mask = all_a;
    let mut cut = exact_cut(mask);
    let (mut best_mask, mut best_cut) = (mask, cut);
    let steps: u64 = 1 << (t - 1);
    for step in 1..steps {
        let v = step.trailing_zeros() as usize + 1;
        let in_a = mask >> v & 1 == 1;
        let mut same = 0.0;
        let mut other = 0.0;
        for u in 0..t {
            if u != v {
                if (mask >> u & 1 == 1) == in_a {
                    same += m[(v, u)];
                } else {
                    other += m[(v, u)];
                }
            }
        }
        mask ^= 1 << v;
        cut += same - other;
        if step % 4096 == 0 {
            cut = exact_cut(mask);
        }
        if cut > best_cut + tol {
            best_cut = cut;
            best_mask = mask;
        } else if cut >= best_cut - tol && lex_less(mask, best_mask) {
            best_cut = best_cut.max(cut);
            best_mask = mask;
        }
    }
    let in_a: Vec<bool> = (0..t).map(|l| best_mask >> l & 1 == 1).collect();
    Ok(FactorAssignment::from_mask(matrix, &in_a, CutMethod::Exact))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    pub restarts: usize,
    pub rounding_repeats: usize,
    pub seed: u64,
    /// Gradient-norm tolerance of the ascent.
    pub tol: f64,
    /// Cap on full row sweeps per restart.
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { restarts: 8, rounding_repeats: 1000, seed: 0, tol: 1e-7, max_iter: 20_000 }
    }
}

/// Rank of the factorization, `ceil(sqrt(2T)) + 1`.
pub fn sdp_rank(t: usize) -> usize {
    ((2.0 * t as f64).sqrt().ceil() as usize) + 1
}

struct Ascent {
    rows: DMatrix<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
}

/// Relaxation objective `(1/2) sum_{i<j} M_ij (1 - v_i . v_j)`.
fn sdp_objective(m: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let g = v * v.transpose();
    let t = m.nrows();
    let mut s = 0.0;
    for r in 0..t {
        for c in r + 1..t {
            s += m[(r, c)] * (1.0 - g[(r, c)]);
        }
    }
    0.5 * s
}

/// Tangent-space gradient of the objective at `v` (rows on unit spheres).
fn riemannian_gradient(m: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = -0.5 * (m * v);
    for (mut gr, vr) in g.row_iter_mut().zip(v.row_iter()) {
        let radial = gr.dot(&vr);
        gr -= vr * radial;
    }
    g
}

fn ascend(m: &DMatrix<f64>, rank: usize, restart: usize, opts: &SdpOptions) -> Ascent {
    let t = m.nrows();
    let mut rng = substream(opts.seed, &format!("separate/sdp-restart-{restart}"));
    let mut v = DMatrix::from_fn(t, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut row in v.row_iter_mut() {
        let n = row.norm();
        row /= n;
    }
    // Row-wise exact maximization: with the other rows fixed the objective
    // is linear in v_i, so the best unit row is -normalize(sum_j M_ij v_j).
    // Every update is an ascent step, and a fixed point is stationary.
    let mut iterations = 0;
    let mut grad_norm = riemannian_gradient(m, &v).norm();
    while grad_norm > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        for i in 0..t {
            let mut g = RowDVector::zeros(rank);
            for j in 0..t {
                if j != i && m[(i, j)] != 0.0 {
                    g += v.row(j) * m[(i, j)];
                }
            }
            let n = g.norm();
            if n > 0.0 {
                v.set_row(i, &(g / -n));
            }
        }
        grad_norm = riemannian_gradient(m, &v).norm();
    }
    let value = sdp_objective(m, &v);
    Ascent { rows: v, value, grad_norm, iterations }
}

/// Goemans-Williamson Max-Cut: low-rank SDP ascent from `restarts` seeded
/// starts, then `rounding_repeats` random hyperplanes through the best
/// solution. Fails with [`Error::SdpNoConvergence`] (carrying the best cut
/// found) when no restart reaches the gradient tolerance.
pub fn max_cut_sdp(matrix: &SeparabilityMatrix, opts: &SdpOptions) -> Result<FactorAssignment> {
    let t = matrix.size();
    if t < 2 {
        return Err(Error::invalid(format!("Max-Cut needs at least 2 nodes, got {t}")));
    }
    if opts.restarts == 0 || opts.rounding_repeats == 0 {
        return Err(Error::invalid("restarts and rounding_repeats must be positive"));
    }
    let m = matrix.symmetrized();
    let rank = sdp_rank(t);
    let runs: Vec<Ascent> = (0..opts.restarts).into_par_iter().map(|r| ascend(&m, rank, r, opts)).collect();
    // highest value wins; ties resolved by the lowest restart index
    let best = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, &Ascent)>, |acc, (i, a)| match acc {
            Some((_, b)) if b.value >= a.value => acc,
            _ => Some((i, a)),
        })
        .map(|(_, a)| a)
        .expect("at least one restart");

    let mut rng = substream(opts.seed, "separate/sdp-rounding");
    let mut best_mask = vec![true; t];
    let mut best_cut = f64::NEG_INFINITY;
    let mut mask = vec![false; t];
    for _ in 0..opts.rounding_repeats {
        let g: Vec<f64> = (0..rank).map(|_| rng.sample(StandardNormal)).collect();
        for (l, row) in best.rows.row_iter().enumerate() {
            let side: f64 = row.iter().zip(&g).map(|(a, b)| a * b).sum();
            mask[l] = side >= 0.0;
        }
        let cut = matrix.cut_value(&mask);
        if cut > best_cut {
            best_cut = cut;
            best_mask.copy_from_slice(&mask);
        }
    }
    let mut out = FactorAssignment::from_mask(matrix, &best_mask, CutMethod::SdpRounded);
    out.sdp_value = Some(best.value);
    out.seed = Some(opts.seed);

    if runs.iter().all(|a| a.grad_norm > opts.tol) {
        let worst = runs.iter().map(|a| a.grad_norm).fold(f64::INFINITY, f64::min);
        return Err(Error::SdpNoConvergence {
            iterations: best.iterations,
            grad_norm: worst,
            best: Box::new(out),
        });
    }
    Ok(out)
}

/// Exact cut when `T <= 24`, SDP rounding otherwise.
pub fn max_cut(matrix: &SeparabilityMatrix, opts: &SdpOptions) -> Result<FactorAssignment> {
    if matrix.size() <= EXACT_LIMIT {
        let mut out = max_cut_exact(matrix)?;
        out.seed = Some(opts.seed);
        Ok(out)
    } else {
        max_cut_sdp(matrix, opts)
    }
}

/// Completes a cut with the product eigenvectors (triplet `k`s that are not
/// factors themselves) and the indices `2..=N+1` seen in no triplet.
pub fn assign_factors(triplets: &TripletList, cut: &FactorAssignment) -> Result<FactorAssignment> {
    let grouped: BTreeSet<usize> = cut.group_a.iter().chain(&cut.group_b).copied().collect();
    let factors: BTreeSet<usize> = triplets.triplets.iter().flat_map(|t| [t.i, t.j]).collect();
    if let Some(missing) = factors.difference(&grouped).next() {
        return Err(Error::invalid(format!("factor eigenvector {missing} is not covered by the cut")));
    }
    let products: BTreeSet<usize> =
        triplets.triplets.iter().map(|t| t.k).filter(|k| !grouped.contains(k)).collect();
    let unassigned = (2..=triplets.n_eigs + 1)
        .filter(|e| !grouped.contains(e) && !products.contains(e))
        .collect();
    Ok(FactorAssignment { products: products.into_iter().collect(), unassigned, ..cut.clone() })
}
