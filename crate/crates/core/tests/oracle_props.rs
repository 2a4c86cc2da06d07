mod common;

use common::*;
use manifactor::oracle::{
    abs_pearson, circle_spectrum, circular_correlation, correlate_mode, interval_spectrum, radius_cv, rectangle_spectrum,
    torus_spectrum, AnalyticSpectrum, Factor,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn a() -> f64 {
    1.0 + PI.sqrt()
}

fn latent_box(n: usize, w: f64, h: f64, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, 2, |_, c| r.gen::<f64>() * if c == 0 { w } else { h })
}

#[test]
fn rectangle_mode_order_and_values() {
    let spec = rectangle_spectrum(a(), 1.5, 5).unwrap();
    let modes = spec.modes();
    assert_eq!(modes[0].index, vec![0, 0]);
    assert_eq!(modes[0].eigenvalue, 0.0);
    let order: Vec<Vec<usize>> = modes[1..].iter().map(|m| m.index.clone()).collect();
    assert_eq!(order, vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1]]);
    // each eigenvalue recomputed from (m pi / a)^2 + (n pi / b)^2
    for m in &modes[1..] {
        let want = (m.index[0] as f64 * PI / a()).powi(2) + (m.index[1] as f64 * PI / 1.5).powi(2);
        assert!(relative_error(m.eigenvalue, want) <= 1e-14);
    }
    // commonly quoted rounded values, which agree only to about 1e-4
    for (m, quoted) in modes[1..].iter().zip([1.28398, 4.38649, 5.13591, 5.67047]) {
        assert!(relative_error(m.eigenvalue, quoted) < 1e-4, "{:?}: {} vs {quoted}", m.index, m.eigenvalue);
    }
    assert_eq!(spec.eigenvalue(&[1, 1]).unwrap(), spec.eigenvalue(&[1, 0]).unwrap() + spec.eigenvalue(&[0, 1]).unwrap());
}

#[test]
fn circle_and_torus_multiplicities() {
    let circle = circle_spectrum(5).unwrap();
    assert_eq!(circle.modes()[0].eigenvalue, 0.0);
    assert_eq!(circle.modes()[1].eigenvalue, 1.0);
    assert_eq!(circle.modes()[1].multiplicity, 2);

    let torus = torus_spectrum(1.0, 1.0, 40).unwrap();
    let latent = latent_box(50, 360.0, 360.0, 1);
    for mode in torus.modes() {
        let nonzero = mode.index.iter().filter(|&&m| m > 0).count();
        assert_eq!(mode.multiplicity, 1 << nonzero);
        assert_eq!(torus.basis(&mode.index, &latent).unwrap().ncols(), mode.multiplicity);
    }
    // a generic pair with both entries nonzero: cos/sin in each angle
    let basis = torus.basis(&[2, 3], &latent).unwrap();
    assert_eq!(basis.ncols(), 4);
    assert!(basis.rank(1e-9) == 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangle_modes_are_products_of_interval_modes(
        m in 0usize..6, k in 0usize..6, w in 0.5f64..4.0, h in 0.5f64..4.0, seed in any::<u64>(),
    ) {
        let rect = rectangle_spectrum(w, h, 4).unwrap();
        let latent = latent_box(40, w, h, seed);
        let joint = rect.basis(&[m, k], &latent).unwrap();
        let ia = Factor::Interval { length: w };
        let ib = Factor::Interval { length: h };
        for r in 0..latent.nrows() {
            let want = ia.basis(m, latent[(r, 0)])[0] * ib.basis(k, latent[(r, 1)])[0];
            prop_assert_eq!(joint[(r, 0)], want);
        }
        let sum = interval_spectrum(w, 1).unwrap().factors()[0].eigenvalue(m) + ib.eigenvalue(k);
        prop_assert_eq!(rect.eigenvalue(&[m, k]).unwrap(), sum);
    }

    #[test]
    fn spectra_are_sorted_and_stable(count in 1usize..60, w in 0.3f64..5.0, h in 0.3f64..5.0) {
        let first = AnalyticSpectrum::product(vec![Factor::Interval { length: w }, Factor::Circle { radius: h }], count).unwrap();
        let second = AnalyticSpectrum::product(vec![Factor::Interval { length: w }, Factor::Circle { radius: h }], count).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(first.modes().len(), count);
        prop_assert!(first.modes().windows(2).all(|p| p[0].eigenvalue <= p[1].eigenvalue));
    }

    #[test]
    fn sampled_modes_correlate_with_themselves(m in 0usize..5, k in 0usize..5, seed in any::<u64>()) {
        let spec = rectangle_spectrum(a(), 1.5, 4).unwrap();
        let latent = latent_box(500, a(), 1.5, seed);
        let v = spec.basis(&[m, k], &latent).unwrap();
        let c = correlate_mode(v.column(0).as_slice(), Some(&latent), &spec, &[m, k]).unwrap();
        prop_assert!(c >= 1.0 - 1e-10);
    }

    #[test]
    fn rotated_degenerate_pair_projects_fully(angle in 0.0f64..std::f64::consts::TAU, seed in any::<u64>()) {
        let spec = circle_spectrum(4).unwrap();
        let mut r = rng(seed);
        let latent = DMatrix::from_fn(400, 1, |_, _| r.gen::<f64>() * 360.0);
        let v: Vec<f64> = latent.iter().map(|t| (2.0 * t.to_radians() + angle).cos()).collect();
        prop_assert!(correlate_mode(&v, Some(&latent), &spec, &[2]).unwrap() >= 1.0 - 1e-10);
    }
}

#[test]
fn distinct_modes_are_nearly_orthogonal() {
    let spec = rectangle_spectrum(a(), 1.5, 10).unwrap();
    for seed in SEEDS {
        let latent = latent_box(10_000, a(), 1.5, seed);
        for (p, q) in [([1, 0], [0, 1]), ([2, 0], [1, 1]), ([1, 0], [3, 0]), ([0, 2], [1, 1])] {
            let v = spec.basis(&p, &latent).unwrap();
            let c = correlate_mode(v.column(0).as_slice(), Some(&latent), &spec, &q).unwrap();
            assert!(c <= 0.05, "seed {seed}: mode {p:?} vs {q:?} correlates {c}");
        }
    }
}

#[test]
fn correlation_needs_latent() {
    let spec = circle_spectrum(3).unwrap();
    assert!(correlate_mode(&[1.0, 2.0], None, &spec, &[1]).is_err());
    let latent = DMatrix::from_element(3, 1, 0.0);
    assert!(correlate_mode(&[1.0, 2.0], Some(&latent), &spec, &[1]).is_err());
    assert!(spec.eigenvalue(&[1, 1]).is_err());
    assert!(rectangle_spectrum(0.0, 1.0, 3).is_err());
}

#[test]
fn summary_statistics() {
    let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| -3.0 * v + 2.0).collect();
    assert!((abs_pearson(&x, &y) - 1.0).abs() < 1e-12);
    assert_eq!(abs_pearson(&x, &vec![1.0; 100]), 0.0);

    let angles: Vec<f64> = (0..360).map(|d| (d as f64).to_radians()).collect();
    let shifted: Vec<f64> = angles.iter().map(|t| t + 1.0).collect();
    let mirrored: Vec<f64> = angles.iter().map(|t| 0.5 - t).collect();
    assert!((circular_correlation(&angles, &shifted) - 1.0).abs() < 1e-12);
    assert!((circular_correlation(&angles, &mirrored) - 1.0).abs() < 1e-12);
    let doubled: Vec<f64> = angles.iter().map(|t| 2.0 * t).collect();
    assert!(circular_correlation(&angles, &doubled) < 1e-10);

    let ring = DMatrix::from_fn(360, 2, |r, c| if c == 0 { 3.0 + (r as f64).to_radians().cos() } else { (r as f64).to_radians().sin() });
    assert!(radius_cv(&ring) < 1e-12);
}
