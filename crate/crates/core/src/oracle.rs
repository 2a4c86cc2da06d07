//! Analytic Laplacian spectra used as ground truth.
//!
//! Each spectrum is a product of one-dimensional factors:
//!
//! * an interval `[0, L]` with Neumann boundary: `cos(m pi x / L)`, eigenvalue `(m pi / L)^2`;
//! * a circle of radius `R`: `cos(n t)` and `sin(n t)`, eigenvalue `n^2 / R^2`.
//!
//! A mode is a multi-index with one entry per factor; its eigenvalue is the
//! sum of the factor eigenvalues and its eigenspace is spanned by products of
//! factor eigenfunctions. Circle angles are given in degrees in latent data.
//! Amplitude constants are dropped since every comparison is scale-invariant.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::cosine_similarity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    Interval { length: f64 },
    Circle { radius: f64 },
}

impl Factor {
    pub fn eigenvalue(&self, m: usize) -> f64 {
        match *self {
            Factor::Interval { length } => (m as f64 * PI / length).powi(2),
            Factor::Circle { radius } => (m as f64 / radius).powi(2),
        }
    }

    /// Dimension of the eigenspace of factor mode `m`.
    pub fn multiplicity(&self, m: usize) -> usize {
        match self {
            Factor::Circle { .. } if m > 0 => 2,
            _ => 1,
        }
    }

    /// Basis functions of mode `m` at coordinate `u`.
    pub fn basis(&self, m: usize, u: f64) -> [f64; 2] {
        match *self {
            Factor::Interval { length } => [(m as f64 * PI * u / length).cos(), 0.0],
            Factor::Circle { .. } => {
                let t = m as f64 * u.to_radians();
                [t.cos(), t.sin()]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            Factor::Interval { length } => length,
            Factor::Circle { radius } => radius,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("factor size must be positive, got {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: Vec<usize>,
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

/// Ascending list of modes of a product of factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSpectrum {
    factors: Vec<Factor>,
    modes: Vec<Mode>,
}

impl AnalyticSpectrum {
    /// The `count` lowest modes of `factors[0] x factors[1] x ...`, ordered by
    /// eigenvalue and then by multi-index.
    pub fn product(factors: Vec<Factor>, count: usize) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("a spectrum needs at least one factor"));
        }
        for f in &factors {
            f.validate()?;
        }
        // every one of the `count` lowest modes has each entry below `count`
        let mut modes = Vec::new();
        let mut idx = vec![0usize; factors.len()];
        'outer: loop {
            let mode = Self::mode_of(&factors, &idx);
            modes.push(mode);
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < count.max(1) {
                    continue 'outer;
                }
                idx[d] = 0;
            }
            break;
        }
        modes.sort_by(|a, b| match a.eigenvalue.partial_cmp(&b.eigenvalue) {
            Some(Ordering::Equal) | None => a.index.cmp(&b.index),
            Some(o) => o,
        });
        modes.truncate(count);
        Ok(Self { factors, modes })
    }

    fn mode_of(factors: &[Factor], idx: &[usize]) -> Mode {
        Mode {
            index: idx.to_vec(),
            eigenvalue: factors.iter().zip(idx).map(|(f, &m)| f.eigenvalue(m)).sum(),
            multiplicity: factors.iter().zip(idx).map(|(f, &m)| f.multiplicity(m)).product(),
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Eigenvalue of an arbitrary multi-index (listed or not).
    pub fn eigenvalue(&self, index: &[usize]) -> Result<f64> {
        self.check(index)?;
        Ok(Self::mode_of(&self.factors, index).eigenvalue)
    }

    fn check(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.factors.len() {
            return Err(Error::invalid(format!(
                "multi-index has {} entries for {} factors",
                index.len(),
                self.factors.len()
            )));
        }
        Ok(())
    }

    /// Basis of the eigenspace of `index` sampled at the latent points
    /// (one row per point, one column per factor): `n x multiplicity`.
    pub fn basis(&self, index: &[usize], latent: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(index)?;
        if latent.ncols() != self.factors.len() {
            return Err(Error::invalid(format!(
                "latent has {} columns for {} factors",
                latent.ncols(),
                self.factors.len()
            )));
        }
        let mult = Self::mode_of(&self.factors, index).multiplicity;
        let mut out = DMatrix::from_element(latent.nrows(), mult, 1.0);
        let mut stride = 1;
        for (d, (f, &m)) in self.factors.iter().zip(index).enumerate() {
            let fm = f.multiplicity(m);
            for r in 0..latent.nrows() {
                let vals = f.basis(m, latent[(r, d)]);
                for c in 0..mult {
                    out[(r, c)] *= vals[(c / stride) % fm];
                }
            }
            stride *= fm;
        }
        Ok(out)
    }
}

pub fn interval_spectrum(length: f64, count: usize) -> Result<AnalyticSpectrum> {
    AnalyticSpectrum::product(vec![Factor::Interval { length }], count)
}

/// Neumann spectrum of `[0, a] x [0, b]`.
pub fn rectangle_spectrum(a: f64, b: f64, count: usize) -> Result<AnalyticSpectrum> {
    AnalyticSpectrum::product(vec![Factor::Interval { length: a }, Factor::Interval { length: b }], count)
}

/// Unit circle; mode `n >= 1` carries the pair `cos(n t), sin(n t)`.
pub fn circle_spectrum(count: usize) -> Result<AnalyticSpectrum> {
    AnalyticSpectrum::product(vec![Factor::Circle { radius: 1.0 }], count)
}

/// Flat torus `S^1(r1) x S^1(r2)`.
pub fn torus_spectrum(r1: f64, r2: f64, count: usize) -> Result<AnalyticSpectrum> {
    AnalyticSpectrum::product(vec![Factor::Circle { radius: r1 }, Factor::Circle { radius: r2 }], count)
}

/// How well `eigvec` matches mode `index`: absolute cosine similarity for a
/// simple mode, norm of the projection of the unit vector onto the sampled
/// eigenspace for a degenerate one.
pub fn correlate_mode(
    eigvec: &[f64],
    latent: Option<&DMatrix<f64>>,
    spectrum: &AnalyticSpectrum,
    index: &[usize],
) -> Result<f64> {
    let latent = latent.ok_or_else(|| Error::invalid("mode correlation needs latent coordinates"))?;
    if latent.nrows() != eigvec.len() {
        return Err(Error::invalid(format!(
            "eigenvector has {} entries but latent has {} rows",
            eigvec.len(),
            latent.nrows()
        )));
    }
    let basis = spectrum.basis(index, latent)?;
    if basis.ncols() == 1 {
        return cosine_similarity(eigvec, basis.column(0).as_slice());
    }
    let v = DVector::from_column_slice(eigvec);
    let vn = v.norm();
    if vn < crate::factorize::NORM_FLOOR {
        return Ok(0.0);
    }
    let q = basis.qr().q();
    Ok(((q.transpose() * &v).norm() / vn).min(1.0))
}

/// `|corr(x, y)|`, 0 when either input is constant.
pub fn abs_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).abs()
}

/// Agreement of two angle samples up to rotation and reflection:
/// `max(|mean e^{i(a - b)}|, |mean e^{i(a + b)}|)`, angles in radians.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let (mut cd, mut sd, mut cs, mut ss) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cd += (x - y).cos();
        sd += (x - y).sin();
        cs += (x + y).cos();
        ss += (x + y).sin();
    }
    (cd.hypot(sd) / n).max(cs.hypot(ss) / n)
}

/// Coefficient of variation of the distance to the centroid of 2-D points.
pub fn radius_cv(xy: &DMatrix<f64>) -> f64 {
    let n = xy.nrows() as f64;
    let cx = xy.column(0).sum() / n;
    let cy = xy.column(1).sum() / n;
    let radii: Vec<f64> = xy.row_iter().map(|r| (r[0] - cx).hypot(r[1] - cy)).collect();
    let mean = radii.iter().sum::<f64>() / n;
    let var = radii.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_pi_plus_one() -> f64 {
        1.0 + PI.sqrt()
    }

    #[test]
    fn interval_modes() {
        let s = interval_spectrum(sqrt_pi_plus_one(), 4).unwrap();
        assert_eq!(s.modes()[0].eigenvalue, 0.0);
        assert!((s.modes()[1].eigenvalue - 1.284018).abs() < 1e-6);
        assert!((s.modes()[2].eigenvalue / s.modes()[1].eigenvalue - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_ordering() {
        let s = rectangle_spectrum(sqrt_pi_plus_one(), 1.5, 5).unwrap();
        let idx: Vec<Vec<usize>> = s.modes().iter().map(|m| m.index.clone()).collect();
        assert_eq!(idx, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1]]);
        let e = |i: usize| s.modes()[i].eigenvalue;
        assert!((e(2) - 4.386491).abs() < 1e-6);
        assert!((e(3) - 5.136072).abs() < 1e-6);
        assert!((e(4) - 5.670509).abs() < 1e-6);
        assert_eq!(e(4), e(1) + e(2));
    }

    #[test]
    fn circle_and_torus_multiplicity() {
        let c = circle_spectrum(3).unwrap();
        assert_eq!(c.modes()[0].multiplicity, 1);
        assert_eq!(c.modes()[1].eigenvalue, 1.0);
        assert_eq!(c.modes()[1].multiplicity, 2);
        let t = torus_spectrum(1.0, 1.0, 30).unwrap();
        let m = t.modes().iter().find(|m| m.index == [2, 1]).unwrap();
        assert_eq!(m.multiplicity, 4);
        assert_eq!(m.eigenvalue, 5.0);
    }

    #[test]
    fn self_correlation_is_one() {
        let latent = DMatrix::from_fn(200, 2, |r, c| if c == 0 { r as f64 * 0.0123 } else { (r * 7 % 200) as f64 * 1.8 });
        let s = AnalyticSpectrum::product(vec![Factor::Interval { length: 2.5 }, Factor::Circle { radius: 1.0 }], 10).unwrap();
        let b = s.basis(&[1, 2], &latent).unwrap();
        assert_eq!(b.ncols(), 2);
        let mixed: Vec<f64> = (0..200).map(|r| 0.6 * b[(r, 0)] - 0.8 * b[(r, 1)]).collect();
        assert!(correlate_mode(&mixed, Some(&latent), &s, &[1, 2]).unwrap() > 1.0 - 1e-10);
        assert!(correlate_mode(&mixed, None, &s, &[1, 2]).is_err());
    }

    #[test]
    fn circular_correlation_reflection() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 * 0.0628).collect();
        let b: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
        assert!((circular_correlation(&a, &b) - 1.0).abs() < 1e-12);
    }
}
