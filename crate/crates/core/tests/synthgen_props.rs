mod common;

use common::*;
use manifactor::oracle::abs_pearson;
use manifactor::synthgen::{
    cylinder_point, pca_whiten, render_image, render_image_surrogate, sample_cylinder, sample_rectangle, sample_torus,
    torus_point, GeneratorKind, STRETCH_RANGE,
};
use manifactor::{Error, GeneratorConfig, PointCloud};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

/// Kolmogorov-Smirnov distance of a sample to the uniform law on `[lo, hi]`.
fn ks_uniform(sample: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn configs(seed: u64) -> Vec<GeneratorConfig> {
    let kinds = [
        GeneratorKind::Rectangle { a: 1.0 + std::f64::consts::PI.sqrt(), b: 1.5, isotropic_noise: false },
        GeneratorKind::Rectangle { a: 2.0, b: 1.0, isotropic_noise: true },
        GeneratorKind::Cylinder { radius: 1.0, length: 2.0 },
        GeneratorKind::Torus { major_radius: 2.0, minor_radius: 0.6 },
        GeneratorKind::ImageSurrogate { side: 16 },
    ];
    kinds.into_iter().map(|kind| GeneratorConfig { kind, n: 300, noise_sigma: 0.1, seed }).collect()
}

/// Declared latent ranges per generator kind.
fn latent_ranges(kind: &GeneratorKind) -> [(f64, f64); 2] {
    match *kind {
        GeneratorKind::Rectangle { a, b, .. } => [(0.0, a), (0.0, b)],
        GeneratorKind::Cylinder { length, .. } => [(0.0, 360.0), (0.0, length)],
        GeneratorKind::Torus { .. } => [(0.0, 360.0), (0.0, 360.0)],
        GeneratorKind::ImageSurrogate { .. } => [(0.0, 360.0), STRETCH_RANGE],
    }
}

fn column(m: &DMatrix<f64>, c: usize) -> Vec<f64> {
    m.column(c).iter().copied().collect()
}

#[test]
fn identical_configs_give_identical_clouds() {
    for seed in SEEDS {
        for cfg in configs(seed) {
            let a = cfg.generate().unwrap();
            let b = cfg.generate().unwrap();
            assert_eq!(a, b);
            let other = GeneratorConfig { seed: seed + 100, ..cfg.clone() }.generate().unwrap();
            assert_ne!(a.points(), other.points(), "{:?}: seed has no effect", cfg.kind);
        }
    }
}

#[test]
fn latent_marginals_are_uniform() {
    for seed in SEEDS {
        for cfg in configs(seed) {
            let n = if matches!(cfg.kind, GeneratorKind::ImageSurrogate { .. }) { 1500 } else { 5000 };
            let cloud = GeneratorConfig { n, ..cfg.clone() }.generate().unwrap();
            let latent = cloud.latent().unwrap();
            for (c, (lo, hi)) in latent_ranges(&cfg.kind).into_iter().enumerate() {
                let col = column(latent, c);
                assert!(col.iter().all(|&v| v >= lo && v <= hi));
                let d = ks_uniform(&col, lo, hi);
                assert!(d <= 2.0 / (n as f64).sqrt(), "seed {seed} {:?} column {c}: KS {d}", cfg.kind);
            }
        }
    }
}

#[test]
fn torus_points_satisfy_the_embedding_identity() {
    for seed in SEEDS {
        let (big, small) = (2.0, 0.6);
        let cloud = sample_torus(2000, big, small, seed).unwrap();
        let latent = cloud.latent().unwrap();
        for r in 0..cloud.n() {
            let p = cloud.points().row(r);
            let ring = p[0].hypot(p[1]);
            assert!(((ring - big).powi(2) + p[2] * p[2] - small * small).abs() <= 1e-12);
            let theta = latent[(r, 0)].to_radians();
            assert!((p[0] * theta.sin() - p[1] * theta.cos()).abs() <= 1e-12);
            let psi = latent[(r, 1)].to_radians();
            assert!((p[2] - small * psi.sin()).abs() <= 1e-12);
        }
    }
    assert_eq!(torus_point(0.0, 0.0, 2.0, 0.6), [2.6, 0.0, 0.0]);
}

#[test]
fn cylinder_points_satisfy_the_embedding_identity() {
    for seed in SEEDS {
        let cloud = sample_cylinder(5000, 1.0, 2.0, seed).unwrap();
        let latent = cloud.latent().unwrap();
        for r in 0..cloud.n() {
            let p = cloud.points().row(r);
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() <= 1e-12);
            assert_eq!(p[2], latent[(r, 1)]);
        }
    }
    let cloud = sample_cylinder(5000, 1.0, 2.0, 5).unwrap();
    let l = cloud.latent().unwrap();
    assert!(abs_pearson(&column(l, 0), &column(l, 1)) < 0.05);
    assert_eq!(cylinder_point(0.0, 0.0, 1.0), [1.0, 0.0, 0.0]);
}

#[test]
fn rectangle_examples() {
    let a = 1.0 + std::f64::consts::PI.sqrt();
    let cloud = sample_rectangle(10_000, a, 1.5, 0.1, 0).unwrap();
    let latent = cloud.latent().unwrap();
    assert!(latent.column(0).iter().all(|&x| (0.0..=a).contains(&x)));
    assert!(latent.column(1).iter().all(|&y| (0.0..=1.5).contains(&y)));
    assert_eq!(cloud.points().columns(0, 2), latent.columns(0, 2));
    let z_mean = cloud.points().column(2).mean();
    assert!(z_mean.abs() < 4.0 * 0.1 / 100.0);

    let single = sample_rectangle(1, a, 1.5, 0.0, 0).unwrap();
    assert_eq!(single.points()[(0, 2)], 0.0);
    assert!(sample_rectangle(10, 0.0, 1.5, 0.1, 0).is_err());
    assert!(sample_rectangle(10, a, 1.5, -0.1, 0).is_err());
    assert!(sample_torus(10, 1.0, 1.0, 0).is_err());
}

#[test]
fn image_contract() {
    let cloud = render_image_surrogate(1, 64, 0.0, 0).unwrap();
    assert_eq!(cloud.dim(), 64 * 64);
    assert!(cloud.points().iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert!(render_image_surrogate(5, 15, 0.1, 0).is_err());
    assert!(render_image(0.0, 0.0, 15).is_err());

    // the bar is asymmetric, so the rotation latent has period 360
    let a = render_image(0.0, 5.0, 64).unwrap();
    let b = render_image(180.0, 5.0, 64).unwrap();
    let c = render_image(360.0, 5.0, 64).unwrap();
    assert!(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() > 10.0);
    assert!(a.iter().zip(&c).all(|(x, y)| (x - y).abs() < 1e-9));

    // the stretch signal clears the per-pixel noise floor of a sample mean
    let sigma = 0.1;
    let lo = render_image(0.0, STRETCH_RANGE.0, 64).unwrap();
    let hi = render_image(0.0, STRETCH_RANGE.1, 64).unwrap();
    let diff = lo.iter().zip(&hi).map(|(x, y)| (x - y).abs()).sum::<f64>() / lo.len() as f64;
    let floor = sigma * (2.0 / lo.len() as f64).sqrt();
    assert!(diff > 3.0 * floor, "stretch signal {diff} vs floor {floor}");
    let noisy = render_image_surrogate(2000, 64, sigma, 2).unwrap();
    assert_eq!(noisy.n(), 2000);
}

#[test]
fn pca_examples() {
    // already white data stays at unit variance
    let mut r = rng(3);
    let pts = DMatrix::from_fn(2000, 3, |_, _| StandardNormal.sample(&mut r));
    let white = pca_whiten(&PointCloud::from_points(pts).unwrap(), 3).unwrap();
    for c in 0..3 {
        let col = white.points().column(c);
        let var = col.map(|v| (v - col.mean()).powi(2)).sum() / 1999.0;
        assert!((var - 1.0).abs() <= 1e-9);
    }

    let images = render_image_surrogate(300, 16, 0.1, 0).unwrap();
    let reduced = pca_whiten(&images, 4).unwrap();
    assert_eq!(reduced.dim(), 4);
    assert_eq!(reduced.latent(), images.latent());

    let line = DMatrix::from_fn(50, 3, |r, c| (r as f64) * (c as f64 + 1.0));
    match pca_whiten(&PointCloud::from_points(line).unwrap(), 2) {
        Err(Error::RankDeficient { requested, rank }) => assert_eq!((requested, rank), (2, 1)),
        other => panic!("expected a rank error, got {other:?}"),
    }
}

fn covariance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c.tr_mul(&c) / (m.nrows() as f64 - 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn whitened_columns_are_uncorrelated(n in 20usize..200, d in 2usize..8, seed in any::<u64>(), p_frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let mix: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| -> f64 { StandardNormal.sample(&mut r) });
        let raw: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| -> f64 { StandardNormal.sample(&mut r) }) * mix;
        let p = 1 + ((d - 1) as f64 * p_frac) as usize;
        let out = pca_whiten(&PointCloud::from_points(raw).unwrap(), p).unwrap();
        let cov = covariance(out.points());
        for i in 0..p {
            prop_assert!((cov[(i, i)] - 1.0).abs() <= 1e-9);
            for j in 0..p {
                if i != j {
                    prop_assert!(cov[(i, j)].abs() <= 1e-6 * cov[(i, i)]);
                }
            }
        }
    }

    #[test]
    fn any_seed_is_reproducible(seed in any::<u64>(), n in 1usize..200) {
        let cfg = GeneratorConfig { kind: GeneratorKind::Torus { major_radius: 3.0, minor_radius: 1.0 }, n, noise_sigma: 0.05, seed };
        prop_assert_eq!(cfg.generate().unwrap(), cfg.generate().unwrap());
    }
}

#[test]
fn surrogate_whitening_is_uncorrelated() {
    for seed in SEEDS {
        let images = render_image_surrogate(600, 32, 0.1, seed).unwrap();
        let cov = covariance(pca_whiten(&images, 4).unwrap().points());
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(cov[(i, j)].abs() <= 1e-6 * cov[(i, i)], "seed {seed}: cov({i},{j}) = {}", cov[(i, j)]);
                }
            }
        }
    }
}
