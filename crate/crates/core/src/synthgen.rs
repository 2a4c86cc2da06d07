//! Seeded synthetic datasets on product manifolds with known latent coordinates.
//!
//! Every generator returns a [`PointCloud`] whose `latent` matrix holds the
//! ground-truth parameters of each sample. Angles are stored in degrees in
//! `[0, 360)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Rng};

/// Smallest image side the surrogate renderer accepts.
pub const MIN_IMAGE_SIDE: usize = 16;

/// Stretch range of the image surrogate.
pub const STRETCH_RANGE: (f64, f64) = (-20.0, 20.0);

/// Generator name plus the numeric parameters it was called with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub generator: String,
    pub params: BTreeMap<String, f64>,
}

impl Descriptor {
    /// Descriptor of data that did not come from a built-in generator.
    pub fn external() -> Self {
        Self::new("external", &[])
    }

    pub fn new(generator: &str, params: &[(&str, f64)]) -> Self {
        Self {
            generator: generator.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// `n` observations in ambient dimension `D` (one per row), with optional
/// ground-truth latent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
    latent: Option<DMatrix<f64>>,
    latent_names: Vec<String>,
    descriptor: Descriptor,
}

impl PointCloud {
    pub fn new(
        points: DMatrix<f64>,
        latent: Option<(DMatrix<f64>, Vec<String>)>,
        descriptor: Descriptor,
    ) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::invalid("point cloud must have n >= 1 and D >= 1"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point cloud contains non-finite entries"));
        }
        let (latent, latent_names) = match latent {
            Some((lat, names)) => {
                if lat.nrows() != points.nrows() {
                    return Err(Error::invalid(format!(
                        "latent has {} rows, points have {}",
                        lat.nrows(),
                        points.nrows()
                    )));
                }
                if names.len() != lat.ncols() {
                    return Err(Error::invalid("latent column names do not match latent width"));
                }
                (Some(lat), names)
            }
            None => (None, Vec::new()),
        };
        Ok(Self { points, latent, latent_names, descriptor })
    }

    /// Wraps raw observations with no ground truth.
    pub fn from_points(points: DMatrix<f64>) -> Result<Self> {
        Self::new(points, None, Descriptor::external())
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn latent(&self) -> Option<&DMatrix<f64>> {
        self.latent.as_ref()
    }

    pub fn latent_names(&self) -> &[String] {
        &self.latent_names
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Rectangle {
        a: f64,
        b: f64,
        /// Also perturb the in-plane coordinates, not only the z coordinate.
        #[serde(default)]
        isotropic_noise: bool,
    },
    Cylinder {
        radius: f64,
        length: f64,
    },
    Torus {
        major_radius: f64,
        minor_radius: f64,
    },
    ImageSurrogate {
        side: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub n: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be finite and >= 0"));
        }
        match self.kind {
            GeneratorKind::Rectangle { a, b, .. } => check_lengths(&[("a", a), ("b", b)]),
            GeneratorKind::Cylinder { radius, length } => {
                check_lengths(&[("radius", radius), ("length", length)])
            }
            GeneratorKind::Torus { major_radius, minor_radius } => {
                check_lengths(&[("major_radius", major_radius), ("minor_radius", minor_radius)])?;
                if major_radius <= minor_radius {
                    return Err(Error::invalid("torus requires major_radius > minor_radius"));
                }
                Ok(())
            }
            GeneratorKind::ImageSurrogate { side } => {
                if side < MIN_IMAGE_SIDE {
                    return Err(Error::invalid(format!(
                        "image side {side} is too small to render both features (minimum {MIN_IMAGE_SIDE})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Samples the configured dataset. Torus and cylinder clouds receive
    /// isotropic noise when `noise_sigma > 0`.
    pub fn generate(&self) -> Result<PointCloud> {
        self.validate()?;
        let (n, sigma, seed) = (self.n, self.noise_sigma, self.seed);
        match self.kind {
            GeneratorKind::Rectangle { a, b, isotropic_noise } => {
                sample_rectangle_with(n, a, b, sigma, isotropic_noise, seed)
            }
            GeneratorKind::Cylinder { radius, length } => {
                let cloud = sample_cylinder(n, radius, length, seed)?;
                add_isotropic_noise(cloud, sigma, seed)
            }
            GeneratorKind::Torus { major_radius, minor_radius } => {
                let cloud = sample_torus(n, major_radius, minor_radius, seed)?;
                add_isotropic_noise(cloud, sigma, seed)
            }
            GeneratorKind::ImageSurrogate { side } => render_image_surrogate(n, side, sigma, seed),
        }
    }
}

fn check_lengths(lengths: &[(&str, f64)]) -> Result<()> {
    for (name, v) in lengths {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be a positive finite length, got {v}")));
        }
    }
    Ok(())
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    Ok(())
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::invalid(format!("noise sigma: {e}")))
}

fn angle_distribution() -> Uniform<f64> {
    Uniform::new(0.0, 360.0)
}

fn add_isotropic_noise(cloud: PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if sigma == 0.0 {
        return Ok(cloud);
    }
    let mut rng = substream(seed, "synthgen/isotropic-noise");
    let noise = normal(sigma)?;
    let PointCloud { mut points, latent, latent_names, mut descriptor } = cloud;
    for v in points.iter_mut() {
        *v += noise.sample(&mut rng);
    }
    descriptor.params.insert("noise_sigma".into(), sigma);
    PointCloud::new(points, latent.map(|l| (l, latent_names)), descriptor)
}

/// Uniform samples of `[0, a] x [0, b]` placed in the `z = 0` plane of R^3,
/// with `N(0, sigma^2)` noise on the z coordinate only.
pub fn sample_rectangle(n: usize, a: f64, b: f64, noise_sigma: f64, seed: u64) -> Result<PointCloud> {
    sample_rectangle_with(n, a, b, noise_sigma, false, seed)
}

/// Rectangle sampler; with `isotropic_noise` the x and y coordinates are
/// perturbed as well (latent coordinates stay noiseless).
pub fn sample_rectangle_with(
    n: usize,
    a: f64,
    b: f64,
    noise_sigma: f64,
    isotropic_noise: bool,
    seed: u64,
) -> Result<PointCloud> {
    check_count(n)?;
    check_lengths(&[("a", a), ("b", b)])?;
    if !(noise_sigma >= 0.0) {
        return Err(Error::invalid("noise_sigma must be >= 0"));
    }
    let mut rng = substream(seed, "synthgen/rectangle");
    let noise = normal(noise_sigma)?;
    let ux = Uniform::new_inclusive(0.0, a);
    let uy = Uniform::new_inclusive(0.0, b);
    let mut points = DMatrix::zeros(n, 3);
    let mut latent = DMatrix::zeros(n, 2);
    for r in 0..n {
        let x = ux.sample(&mut rng);
        let y = uy.sample(&mut rng);
        let z = noise.sample(&mut rng);
        latent[(r, 0)] = x;
        latent[(r, 1)] = y;
        points[(r, 0)] = x;
        points[(r, 1)] = y;
        points[(r, 2)] = z;
        if isotropic_noise {
            points[(r, 0)] += noise.sample(&mut rng);
            points[(r, 1)] += noise.sample(&mut rng);
        }
    }
    let descriptor = Descriptor::new(
        "rectangle",
        &[
            ("n", n as f64),
            ("a", a),
            ("b", b),
            ("noise_sigma", noise_sigma),
            ("isotropic_noise", if isotropic_noise { 1.0 } else { 0.0 }),
            ("seed", seed as f64),
        ],
    );
    PointCloud::new(points, Some((latent, vec!["x".into(), "y".into()])), descriptor)
}

/// Standard torus embedding; angles in degrees.
pub fn torus_point(theta_deg: f64, psi_deg: f64, major_radius: f64, minor_radius: f64) -> [f64; 3] {
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let (sp, cp) = psi_deg.to_radians().sin_cos();
    let ring = major_radius + minor_radius * cp;
    [ring * ct, ring * st, minor_radius * sp]
}

/// Cylinder embedding of (angle in degrees, height).
pub fn cylinder_point(theta_deg: f64, s: f64, radius: f64) -> [f64; 3] {
    let (st, ct) = theta_deg.to_radians().sin_cos();
    [radius * ct, radius * st, s]
}

/// Torus with latent angles drawn i.i.d. uniform on `[0, 360)^2`.
pub fn sample_torus(n: usize, major_radius: f64, minor_radius: f64, seed: u64) -> Result<PointCloud> {
    check_count(n)?;
    check_lengths(&[("major_radius", major_radius), ("minor_radius", minor_radius)])?;
    if major_radius <= minor_radius {
        return Err(Error::invalid(format!(
            "self-intersecting torus rejected: R = {major_radius} <= r = {minor_radius}"
        )));
    }
    let mut rng = substream(seed, "synthgen/torus");
    let angle = angle_distribution();
    let mut points = DMatrix::zeros(n, 3);
    let mut latent = DMatrix::zeros(n, 2);
    for r in 0..n {
        let theta = angle.sample(&mut rng);
        let psi = angle.sample(&mut rng);
        latent[(r, 0)] = theta;
        latent[(r, 1)] = psi;
        let p = torus_point(theta, psi, major_radius, minor_radius);
        for c in 0..3 {
            points[(r, c)] = p[c];
        }
    }
    let descriptor = Descriptor::new(
        "torus",
        &[("n", n as f64), ("major_radius", major_radius), ("minor_radius", minor_radius), ("seed", seed as f64)],
    );
    PointCloud::new(points, Some((latent, vec!["theta".into(), "psi".into()])), descriptor)
}

/// Cylinder with latent `(theta, s)` uniform on `[0, 360) x [0, length]`.
pub fn sample_cylinder(n: usize, radius: f64, length: f64, seed: u64) -> Result<PointCloud> {
    check_count(n)?;
    check_lengths(&[("radius", radius), ("length", length)])?;
    let mut rng = substream(seed, "synthgen/cylinder");
    let angle = angle_distribution();
    let height = Uniform::new_inclusive(0.0, length);
    let mut points = DMatrix::zeros(n, 3);
    let mut latent = DMatrix::zeros(n, 2);
    for r in 0..n {
        let theta = angle.sample(&mut rng);
        let s = height.sample(&mut rng);
        latent[(r, 0)] = theta;
        latent[(r, 1)] = s;
        let p = cylinder_point(theta, s, radius);
        for c in 0..3 {
            points[(r, c)] = p[c];
        }
    }
    let descriptor = Descriptor::new(
        "cylinder",
        &[("n", n as f64), ("radius", radius), ("length", length), ("seed", seed as f64)],
    );
    PointCloud::new(points, Some((latent, vec!["theta".into(), "s".into()])), descriptor)
}

/// Pixel coverage of a shape with signed distance `dist` (negative inside),
/// anti-aliased over one pixel.
fn coverage(dist: f64) -> f64 {
    (0.5 - dist).clamp(0.0, 1.0)
}

fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Renders one noiseless `side x side` image (row-major, values in `[0, 1]`).
///
/// The rotating part is a bar through the image centre whose arms have
/// unequal lengths, so the rotation latent has period 360 degrees. The
/// stretching part is a wide axis-aligned ellipse along the bottom edge whose
/// horizontal radius grows linearly with `stretch` over [`STRETCH_RANGE`].
/// The two parts never overlap.
pub fn render_image(theta_deg: f64, stretch: f64, side: usize) -> Result<Vec<f64>> {
    if side < MIN_IMAGE_SIDE {
        return Err(Error::invalid(format!(
            "image side {side} is too small to render both features (minimum {MIN_IMAGE_SIDE})"
        )));
    }
    let s = side as f64;
    let centre = (s - 1.0) / 2.0;
    let (sin_t, cos_t) = theta_deg.to_radians().sin_cos();
    let long_arm = 0.15 * s;
    let short_arm = 0.03 * s;
    let half_width = 0.12 * s;
    // image rows grow downwards; keep the angle counter-clockwise on screen
    let (ax, ay) = (centre - short_arm * cos_t, centre + short_arm * sin_t);
    let (bx, by) = (centre + long_arm * cos_t, centre - long_arm * sin_t);

    let (lo, hi) = STRETCH_RANGE;
    let frac = ((stretch - lo) / (hi - lo)).clamp(0.0, 1.0);
    let rx = (0.05 + 0.40 * frac) * s;
    let ry = 0.09 * s;
    let (ex, ey) = (centre, 0.87 * s);

    let mut img = vec![0.0; side * side];
    for row in 0..side {
        for col in 0..side {
            let (x, y) = (col as f64, row as f64);
            let bar = coverage(segment_distance(x, y, ax, ay, bx, by) - half_width);
            // first-order signed distance to the ellipse boundary
            let (u, v) = ((x - ex) / rx, (y - ey) / ry);
            let q = (u * u + v * v).sqrt();
            let grad = ((u / rx).powi(2) + (v / ry).powi(2)).sqrt() / q.max(1e-12);
            let ell = coverage((q - 1.0) / grad.max(1e-12));
            img[row * side + col] = (bar + ell).min(1.0);
        }
    }
    Ok(img)
}

/// Image-valued surrogate for a two-part molecule: a rotating bar (circle
/// latent) and a stretching ellipse (interval latent). Latent
/// `(theta, s)` is uniform on `[0, 360) x [-20, 20]`; pixels receive i.i.d.
/// `N(0, noise_sigma^2)` noise. `D = side^2`.
pub fn render_image_surrogate(n: usize, side: usize, noise_sigma: f64, seed: u64) -> Result<PointCloud> {
    check_count(n)?;
    if side < MIN_IMAGE_SIDE {
        return Err(Error::invalid(format!(
            "image side {side} is too small to render both features (minimum {MIN_IMAGE_SIDE})"
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::invalid("noise_sigma must be >= 0"));
    }
    let mut rng = substream(seed, "synthgen/image-surrogate");
    let noise = normal(noise_sigma)?;
    let angle = angle_distribution();
    let stretch = Uniform::new_inclusive(STRETCH_RANGE.0, STRETCH_RANGE.1);
    let d = side * side;
    let mut points = DMatrix::zeros(n, d);
    let mut latent = DMatrix::zeros(n, 2);
    for r in 0..n {
        let theta = angle.sample(&mut rng);
        let s = stretch.sample(&mut rng);
        latent[(r, 0)] = theta;
        latent[(r, 1)] = s;
        let img = render_image(theta, s, side)?;
        for (c, px) in img.into_iter().enumerate() {
            let eps = if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            points[(r, c)] = px + eps;
        }
    }
    let descriptor = Descriptor::new(
        "image-surrogate",
        &[("n", n as f64), ("side", side as f64), ("noise_sigma", noise_sigma), ("seed", seed as f64)],
    );
    PointCloud::new(points, Some((latent, vec!["theta".into(), "s".into()])), descriptor)
}

/// Relative eigenvalue cutoff used to decide the numerical rank in PCA.
const RANK_TOL: f64 = 1e-10;

/// Above this ambient dimension PCA uses a randomized range finder instead of
/// the full covariance matrix.
const DENSE_PCA_MAX_DIM: usize = 512;

/// Projects onto the top `p` principal components of the centred data and
/// scales every component to unit (sample) variance. Latent coordinates are
/// copied through.
pub fn pca_whiten(cloud: &PointCloud, p: usize) -> Result<PointCloud> {
    let (n, d) = (cloud.n(), cloud.dim());
    if p == 0 || p > n.min(d) {
        return Err(Error::invalid(format!("pca components {p} must lie in [1, min(n, D) = {}]", n.min(d))));
    }
    if n < 2 {
        return Err(Error::RankDeficient { requested: p, rank: 0 });
    }
    let mut centred = cloud.points().clone();
    for mut col in centred.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }

    // `basis` spans (an approximation of) the dominant right singular space.
    let basis = if d <= DENSE_PCA_MAX_DIM {
        DMatrix::identity(d, d)
    } else {
        randomized_row_space(&centred, p)
    };
    let reduced = &centred * &basis;
    let cov = reduced.tr_mul(&reduced) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > RANK_TOL * top && top > 0.0).count();
    if rank < p {
        return Err(Error::RankDeficient { requested: p, rank });
    }

    let mut out = DMatrix::zeros(n, p);
    for (c, &idx) in order.iter().take(p).enumerate() {
        let mut dir = eig.eigenvectors.column(idx).clone_owned();
        fix_sign(dir.as_mut_slice());
        let proj = &reduced * dir;
        let scale = 1.0 / eig.eigenvalues[idx].sqrt();
        out.set_column(c, &(proj * scale));
    }

    let mut descriptor = cloud.descriptor().clone();
    descriptor.params.insert("pca_components".into(), p as f64);
    PointCloud::new(
        out,
        cloud.latent().map(|l| (l.clone(), cloud.latent_names().to_vec())),
        descriptor,
    )
}

/// Largest-magnitude entry positive, ties to the lowest index.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Orthonormal `D x l` basis approximating the dominant right singular
/// subspace of `x` (subspace iteration with a Gaussian start).
fn randomized_row_space(x: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let d = x.ncols();
    let l = (p + 10).min(d);
    let mut rng: Rng = substream(0, "synthgen/pca-range-finder");
    let omega = DMatrix::from_fn(d, l, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = (x * omega).qr().q();
    let mut z = x.tr_mul(&q).qr().q();
    for _ in 0..4 {
        q = (x * &z).qr().q();
        z = x.tr_mul(&q).qr().q();
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_latent_within_bounds() {
        let a = 1.0 + std::f64::consts::PI.sqrt();
        let cloud = sample_rectangle(10_000, a, 1.5, 0.1, 7).unwrap();
        let lat = cloud.latent().unwrap();
        assert!(lat.column(0).iter().all(|&x| (0.0..=2.7725).contains(&x)));
        assert!(lat.column(1).iter().all(|&y| (0.0..=1.5).contains(&y)));
        assert_eq!(cloud.dim(), 3);
    }

    #[test]
    fn zero_noise_single_point() {
        let cloud = sample_rectangle(1, 1.0, 1.0, 0.0, 0).unwrap();
        assert_eq!(cloud.points()[(0, 2)], 0.0);
    }

    #[test]
    fn rectangle_rejects_bad_dimensions() {
        assert!(matches!(sample_rectangle(10, 0.0, 1.0, 0.1, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(sample_rectangle(10, 1.0, -1.0, 0.1, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rectangle_isotropic_noise_moves_plane_coordinates() {
        let cloud = sample_rectangle_with(50, 1.0, 1.0, 0.1, true, 3).unwrap();
        let lat = cloud.latent().unwrap();
        let moved = (0..50).filter(|&r| cloud.points()[(r, 0)] != lat[(r, 0)]).count();
        assert_eq!(moved, 50);
    }

    #[test]
    fn torus_origin_angles() {
        assert_eq!(torus_point(0.0, 0.0, 2.0, 1.0), [3.0, 0.0, 0.0]);
    }

    #[test]
    fn torus_rejects_self_intersection() {
        assert!(sample_torus(10, 1.0, 1.0, 0).is_err());
        assert!(sample_torus(10, 0.5, 1.0, 0).is_err());
    }

    #[test]
    fn cylinder_origin() {
        assert_eq!(cylinder_point(0.0, 0.0, 1.0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn image_values_in_unit_interval() {
        let cloud = render_image_surrogate(1, 64, 0.0, 0).unwrap();
        assert_eq!(cloud.dim(), 64 * 64);
        assert!(cloud.points().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn image_rotation_has_full_period() {
        let a = render_image(0.0, 0.0, 64).unwrap();
        let b = render_image(180.0, 0.0, 64).unwrap();
        let c = render_image(360.0, 0.0, 64).unwrap();
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff > 50.0, "180 degree turn should change the image, diff {diff}");
        let same: f64 = a.iter().zip(&c).map(|(x, y)| (x - y).abs()).sum();
        assert!(same < 1e-9);
    }

    #[test]
    fn image_side_too_small() {
        assert!(matches!(render_image_surrogate(1, 15, 0.0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn pca_rank_deficient() {
        let pts = DMatrix::from_fn(20, 3, |r, c| (r as f64) * (c as f64 + 1.0));
        let cloud = PointCloud::from_points(pts).unwrap();
        match pca_whiten(&cloud, 2) {
            Err(Error::RankDeficient { requested: 2, rank: 1 }) => {}
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn pca_rejects_out_of_range_component_count() {
        let cloud = sample_rectangle(10, 1.0, 1.0, 0.1, 0).unwrap();
        assert!(pca_whiten(&cloud, 0).is_err());
        assert!(pca_whiten(&cloud, 4).is_err());
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = GeneratorConfig {
            kind: GeneratorKind::Torus { major_radius: 2.0, minor_radius: 0.7 },
            n: 100,
            noise_sigma: 0.0,
            seed: 4,
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: GeneratorConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
