//! Kernel graph, random-walk Laplacian spectrum and diffusion coordinates.
//!
//! The random-walk Laplacian `L_rw = I - D^-1 W` is not symmetric, so its
//! eigenpairs are obtained from the similar matrix
//! `L_sym = D^{-1/2} (D - W) D^{-1/2}`: both share eigenvalues and
//! `phi = D^{-1/2} u` maps an `L_sym` eigenvector `u` to an `L_rw` one.
//!
//! Eigenvector indices are 1-based throughout the crate, with index 1 the
//! trivial constant eigenvector (eigenvalue 0).

mod eigen;
mod kernel;

use nalgebra::{DMatrix, DVectorView};

pub use eigen::{EigenOptions, SolverKind};
pub use kernel::{density_normalize, pairwise_kernel, select_epsilon, CsrMatrix, KernelGraph, Weights, EDGE_EPS};

use crate::error::{Error, Result};
use crate::synthgen::fix_sign;

/// Ascending random-walk Laplacian eigenvalues with unit-norm, sign-fixed
/// eigenvectors. Holds `N + 1` pairs; pair 1 is the trivial one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    epsilon: f64,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from explicit pairs (column `c` of
    /// `eigenvectors` is eigenvector `c + 1`).
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, epsilon: f64) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.ncols() {
            return Err(Error::invalid(format!(
                "{} eigenvalues but {} eigenvectors",
                eigenvalues.len(),
                eigenvectors.ncols()
            )));
        }
        if eigenvalues.is_empty() {
            return Err(Error::invalid("decomposition needs at least the trivial pair"));
        }
        Ok(Self { eigenvalues, eigenvectors, epsilon })
    }

    pub fn n_points(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Number of nontrivial pairs `N`.
    pub fn n_eigs(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    /// All `N + 1` eigenvalues, trivial first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `n x (N + 1)` eigenvector matrix, trivial first.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Eigenvalue with 1-based index.
    pub fn eigenvalue(&self, index: usize) -> f64 {
        self.eigenvalues[index - 1]
    }

    /// Eigenvector with 1-based index.
    pub fn eigenvector(&self, index: usize) -> DVectorView<'_, f64> {
        self.eigenvectors.column(index - 1)
    }

    /// The first `n_eigs` nontrivial pairs (plus the trivial one).
    pub fn truncated(&self, n_eigs: usize) -> Result<Self> {
        if n_eigs > self.n_eigs() {
            return Err(Error::invalid(format!("cannot keep {n_eigs} of {} pairs", self.n_eigs())));
        }
        Ok(Self {
            eigenvalues: self.eigenvalues[..=n_eigs].to_vec(),
            eigenvectors: self.eigenvectors.columns(0, n_eigs + 1).into_owned(),
            epsilon: self.epsilon,
        })
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.eigenvalues.len() {
            return Err(Error::Index { index, valid: format!("1..={}", self.eigenvalues.len()) });
        }
        Ok(())
    }
}

/// The `N + 1` smallest eigenpairs of `L_rw` with default solver options.
pub fn spectral_decompose(graph: &KernelGraph, n_eigs: usize) -> Result<SpectralDecomposition> {
    spectral_decompose_with(graph, n_eigs, &EigenOptions::default())
}

pub fn spectral_decompose_with(graph: &KernelGraph, n_eigs: usize, opts: &EigenOptions) -> Result<SpectralDecomposition> {
    let n = graph.n();
    if n_eigs + 1 > n {
        return Err(Error::invalid(format!("{} eigenpairs requested from {n} points", n_eigs + 1)));
    }
    if let Some(index) = graph.degrees().iter().position(|&d| !(d > 0.0)) {
        return Err(Error::DisconnectedPoint { index });
    }
    let components = graph.component_count();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }

    let op = eigen::LaplacianOp::new(graph);
    let pairs = eigen::smallest_eigenpairs(&op, n_eigs + 1, opts)?;
    // the sym residual bound carries over to L_rw up to sqrt(dmax / dmin)
    if !(pairs.max_residual <= opts.tol.max(1e-9)) {
        return Err(Error::NoConvergence { iterations: opts.max_iter, residual: pairs.max_residual });
    }

    let mut vectors = pairs.vectors;
    for mut col in vectors.column_iter_mut() {
        for (v, d) in col.iter_mut().zip(graph.degrees()) {
            *v /= d.sqrt();
        }
        let norm = col.norm();
        col /= norm;
        fix_sign(col.as_mut_slice());
    }
    Ok(SpectralDecomposition { eigenvalues: pairs.values, eigenvectors: vectors, epsilon: graph.epsilon() })
}

/// Diffusion coordinates at time `t`: column `j` is
/// `(1 - lambda_{j+1})^t phi_{j+1}` for the `N` nontrivial pairs.
pub fn diffusion_coordinates(dec: &SpectralDecomposition, t: u32) -> DMatrix<f64> {
    let n = dec.n_points();
    let mut out = DMatrix::zeros(n, dec.n_eigs());
    for j in 0..dec.n_eigs() {
        let scale = (1.0 - dec.eigenvalue(j + 2)).powi(t as i32);
        out.set_column(j, &(dec.eigenvector(j + 2) * scale));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, 2, |r, c| {
            let t = r as f64 / n as f64 * std::f64::consts::TAU + 0.01 * (r % 3) as f64;
            if c == 0 {
                t.cos()
            } else {
                t.sin()
            }
        })
    }

    #[test]
    fn trivial_pair_is_constant() {
        let g = pairwise_kernel(&ring(60), 0.05, None).unwrap();
        let dec = spectral_decompose(&g, 5).unwrap();
        assert!(dec.eigenvalue(1).abs() < 1e-8);
        let v = dec.eigenvector(1);
        let mean = v.mean();
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        assert!(sd / mean.abs() < 1e-4);
    }

    #[test]
    fn disconnected_graph_reports_components() {
        let pts = DMatrix::from_row_slice(6, 1, &[0.0, 0.1, 0.2, 50.0, 50.1, 50.2]);
        let g = pairwise_kernel(&pts, 0.05, None).unwrap();
        match spectral_decompose(&g, 2) {
            Err(Error::Disconnected { components: 2 }) => {}
            other => panic!("expected connectivity error, got {other:?}"),
        }
    }

    #[test]
    fn too_many_pairs_requested() {
        let g = pairwise_kernel(&ring(10), 0.5, None).unwrap();
        assert!(spectral_decompose(&g, 10).is_err());
    }

    #[test]
    fn diffusion_time_zero_is_identity() {
        let g = pairwise_kernel(&ring(40), 0.1, None).unwrap();
        let dec = spectral_decompose(&g, 4).unwrap();
        let coords = diffusion_coordinates(&dec, 0);
        for j in 0..4 {
            assert_eq!(coords.column(j), dec.eigenvector(j + 2));
        }
    }

    #[test]
    fn index_checks() {
        let g = pairwise_kernel(&ring(20), 0.1, None).unwrap();
        let dec = spectral_decompose(&g, 3).unwrap();
        assert!(dec.check_index(0).is_err());
        assert!(dec.check_index(4).is_ok());
        assert!(dec.check_index(5).is_err());
    }
}
