//! End-to-end runs: generate, decompose, factorize, separate, embed.
//!
//! A [`PipelineConfig`] is a TOML document; every field has a default so a
//! file only needs the keys it changes. The single `seed` drives every
//! random choice through named substreams, so the generator's own `seed`
//! key is overwritten by it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::factorize::{criterion_scatter, find_triplets, DeltaMode, FactorizationParams, TripletList};
use crate::io;
use crate::separate::{assign_factors, build_separability, max_cut, FactorAssignment, SdpOptions, SeparabilityMatrix};
use crate::spectral::{
    density_normalize, pairwise_kernel, select_epsilon, spectral_decompose_with, EigenOptions, SolverKind,
    SpectralDecomposition,
};
use crate::synthgen::{pca_whiten, GeneratorConfig, GeneratorKind, PointCloud};

/// Above this many points the kernel is sparsified to nearest neighbours.
pub const DENSE_KERNEL_MAX: usize = 2000;
pub const DEFAULT_NEIGHBORS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EpsilonMode {
    /// Median squared pairwise distance times `scale`.
    AutoMedian {
        #[serde(default = "one")]
        scale: f64,
    },
    Fixed {
        value: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for EpsilonMode {
    fn default() -> Self {
        EpsilonMode::AutoMedian { scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaxCutConfig {
    pub restarts: usize,
    pub rounding_repeats: usize,
}

impl Default for MaxCutConfig {
    fn default() -> Self {
        let d = SdpOptions::default();
        Self { restarts: d.restarts, rounding_repeats: d.rounding_repeats }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub generator: GeneratorConfig,
    pub pca_components: Option<usize>,
    pub epsilon: EpsilonMode,
    /// Nearest-neighbour truncation; unset means dense up to
    /// [`DENSE_KERNEL_MAX`] points and [`DEFAULT_NEIGHBORS`] above.
    pub neighbors: Option<usize>,
    pub density_normalization: bool,
    pub n_eigs: usize,
    pub delta: f64,
    pub gamma: f64,
    pub delta_mode: DeltaMode,
    pub maxcut: MaxCutConfig,
    pub embed_dims: usize,
    /// `k` values whose criterion scatter is written; unset means every `k`
    /// that produced a triplet.
    pub criterion_k: Option<Vec<usize>>,
    pub solver: SolverKind,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::rectangle_example("out")
    }
}

impl PipelineConfig {
    /// The rectangle `[0, 1 + sqrt(pi)] x [0, 1.5]` with noise 0.1 on `z`,
    /// 10000 points, 60 eigenvectors, `delta = 0.5`, `gamma = 0.85`.
    pub fn rectangle_example(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            seed: 0,
            output_dir: output_dir.into(),
            generator: GeneratorConfig {
                kind: GeneratorKind::Rectangle { a: 1.0 + std::f64::consts::PI.sqrt(), b: 1.5, isotropic_noise: false },
                n: 10_000,
                noise_sigma: 0.1,
                seed: 0,
            },
            pca_components: None,
            epsilon: EpsilonMode::Fixed { value: 0.02 },
            neighbors: Some(128),
            density_normalization: true,
            n_eigs: 60,
            delta: 0.5,
            gamma: 0.85,
            delta_mode: DeltaMode::Raw,
            maxcut: MaxCutConfig::default(),
            embed_dims: 2,
            criterion_k: None,
            solver: SolverKind::Auto,
        }
    }

    /// Runtime benchmark setup: the rectangle with `delta = 2.0`,
    /// `gamma = 0.75`.
    pub fn runtime_example(output_dir: impl Into<PathBuf>) -> Self {
        Self { delta: 2.0, gamma: 0.75, ..Self::rectangle_example(output_dir) }
    }

    /// Torus with `R = 2`, `r = 0.6`. The thresholds are relative to the
    /// first nontrivial eigenvalue: raw graph eigenvalues at this bandwidth
    /// are all far below 1 and would not filter anything.
    pub fn torus_example(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            generator: GeneratorConfig {
                kind: GeneratorKind::Torus { major_radius: 2.0, minor_radius: 0.6 },
                n: 20_000,
                noise_sigma: 0.0,
                seed: 0,
            },
            epsilon: EpsilonMode::Fixed { value: 0.015 },
            neighbors: Some(128),
            density_normalization: true,
            n_eigs: 30,
            delta: 1.0,
            gamma: 0.6,
            delta_mode: DeltaMode::Relative,
            ..Self::rectangle_example(output_dir)
        }
    }

    /// Rotating-bar and stretching-ellipse images, 32 x 32 pixels with pixel
    /// noise 0.1, whitened onto four principal components.
    pub fn image_example(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            generator: GeneratorConfig { kind: GeneratorKind::ImageSurrogate { side: 32 }, n: 8000, noise_sigma: 0.1, seed: 0 },
            pca_components: Some(4),
            epsilon: EpsilonMode::AutoMedian { scale: 0.5 },
            neighbors: Some(128),
            density_normalization: false,
            n_eigs: 30,
            delta: 1.0,
            gamma: 0.8,
            delta_mode: DeltaMode::Relative,
            ..Self::rectangle_example(output_dir)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn factorization(&self) -> FactorizationParams {
        FactorizationParams { delta: self.delta, gamma: self.gamma, n_eigs: self.n_eigs, delta_mode: self.delta_mode }
    }

    pub fn sdp_options(&self) -> SdpOptions {
        SdpOptions {
            restarts: self.maxcut.restarts,
            rounding_repeats: self.maxcut.rounding_repeats,
            seed: self.seed,
            ..SdpOptions::default()
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions { solver: self.solver, seed: self.seed, ..EigenOptions::default() }
    }

    /// Neighbour count actually used for `n` points.
    pub fn resolved_neighbors(&self, n: usize) -> Option<usize> {
        self.neighbors.or((n > DENSE_KERNEL_MAX).then_some(DEFAULT_NEIGHBORS))
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.factorization().validate()?;
        if self.n_eigs < 2 {
            return Err(Error::invalid("n_eigs must be at least 2"));
        }
        match self.epsilon {
            EpsilonMode::AutoMedian { scale } if !(scale > 0.0) => {
                return Err(Error::invalid(format!("epsilon scale must be > 0, got {scale}")))
            }
            EpsilonMode::Fixed { value } if !(value > 0.0) => {
                return Err(Error::invalid(format!("epsilon must be > 0, got {value}")))
            }
            _ => {}
        }
        if self.pca_components == Some(0) {
            return Err(Error::invalid("pca_components must be >= 1"));
        }
        if self.maxcut.restarts == 0 || self.maxcut.rounding_repeats == 0 {
            return Err(Error::invalid("maxcut restarts and rounding_repeats must be >= 1"));
        }
        Ok(())
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub generate: f64,
    pub pca: f64,
    pub kernel: f64,
    pub eigensolve: f64,
    pub factorize: f64,
    pub separate: f64,
    pub embed: f64,
    pub write: f64,
    pub total: f64,
}

impl StageTimings {
    /// Kernel construction plus eigensolve.
    pub fn decomposition(&self) -> f64 {
        self.kernel + self.eigensolve
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f();
    *slot = t.elapsed().as_secs_f64();
    out
}

/// Everything computed from one point cloud.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub decomposition: SpectralDecomposition,
    pub triplets: TripletList,
    pub separability: SeparabilityMatrix,
    pub assignment: FactorAssignment,
    pub neighbors: Option<usize>,
}

pub fn resolve_epsilon(cloud: &PointCloud, mode: EpsilonMode) -> Result<f64> {
    match mode {
        EpsilonMode::AutoMedian { scale } => select_epsilon(cloud.points(), scale),
        EpsilonMode::Fixed { value } => Ok(value),
    }
}

/// Kernel graph and spectrum of a cloud.
pub fn decompose(cloud: &PointCloud, cfg: &PipelineConfig, timings: &mut StageTimings) -> Result<SpectralDecomposition> {
    let neighbors = cfg.resolved_neighbors(cloud.n());
    let graph = timed(&mut timings.kernel, || {
        let eps = resolve_epsilon(cloud, cfg.epsilon)?;
        let g = pairwise_kernel(cloud.points(), eps, neighbors)?;
        if cfg.density_normalization {
            density_normalize(&g)
        } else {
            Ok(g)
        }
    })
    .map_err(|e| e.in_stage("decompose"))?;
    timed(&mut timings.eigensolve, || spectral_decompose_with(&graph, cfg.n_eigs, &cfg.eigen_options()))
        .map_err(|e| e.in_stage("decompose"))
}

/// Triplets, separability matrix and final assignment of a decomposition.
pub fn factor_decomposition(
    dec: &SpectralDecomposition,
    cfg: &PipelineConfig,
    timings: &mut StageTimings,
) -> Result<(TripletList, SeparabilityMatrix, FactorAssignment)> {
    let triplets =
        timed(&mut timings.factorize, || find_triplets(dec, &cfg.factorization())).map_err(|e| e.in_stage("factorize"))?;
    let (sep, assignment) = timed(&mut timings.separate, || {
        let sep = build_separability(&triplets)?;
        let cut = max_cut(&sep, &cfg.sdp_options())?;
        Ok((sep, assign_factors(&triplets, &cut)?))
    })
    .map_err(|e| e.in_stage("separate"))?;
    Ok((triplets, sep, assignment))
}

/// In-memory analysis of an already prepared (e.g. PCA-reduced) cloud.
pub fn analyze(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<(Analysis, StageTimings)> {
    cfg.validate()?;
    let mut timings = StageTimings::default();
    let decomposition = decompose(cloud, cfg, &mut timings)?;
    let (triplets, separability, assignment) = factor_decomposition(&decomposition, cfg, &mut timings)?;
    let analysis = Analysis { decomposition, triplets, separability, assignment, neighbors: cfg.resolved_neighbors(cloud.n()) };
    Ok((analysis, timings))
}

/// Generator output after the optional PCA step.
pub fn prepare_cloud(cfg: &PipelineConfig, timings: &mut StageTimings) -> Result<PointCloud> {
    let mut gen = cfg.generator.clone();
    gen.seed = cfg.seed;
    let cloud = timed(&mut timings.generate, || gen.generate()).map_err(|e| e.in_stage("generate"))?;
    match cfg.pca_components {
        Some(p) => timed(&mut timings.pca, || pca_whiten(&cloud, p)).map_err(|e| e.in_stage("generate")),
        None => Ok(cloud),
    }
}

/// Per-factor Laplacian eigenmaps: the `dims` lowest-eigenvalue members of
/// each group, in ascending eigenvalue order.
pub fn embed_factors(
    dec: &SpectralDecomposition,
    assignment: &FactorAssignment,
    dims: usize,
) -> Result<[(Vec<usize>, DMatrix<f64>); 2]> {
    let embed = |group: usize, members: &[usize]| -> Result<(Vec<usize>, DMatrix<f64>)> {
        for &k in members {
            dec.check_index(k)?;
        }
        if members.len() < dims {
            return Err(Error::InsufficientFactors { group, size: members.len(), dims });
        }
        let mut sorted = members.to_vec();
        sorted.sort_by(|a, b| dec.eigenvalue(*a).total_cmp(&dec.eigenvalue(*b)).then(a.cmp(b)));
        sorted.truncate(dims);
        let mut m = DMatrix::zeros(dec.n_points(), dims);
        for (c, &k) in sorted.iter().enumerate() {
            m.set_column(c, &dec.eigenvector(k));
        }
        Ok((sorted, m))
    };
    Ok([embed(0, &assignment.group_a)?, embed(1, &assignment.group_b)?])
}

/// Summary returned by [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub epsilon: f64,
    pub n_points: usize,
    pub timings: StageTimings,
    pub triplets: TripletList,
    pub assignment: FactorAssignment,
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "config": self.config,
            "epsilon": self.epsilon,
            "n_points": self.n_points,
            "n_triplets": self.triplets.len(),
            "visited_pairs": self.triplets.visited_pairs,
            "assignment": io::assignment_json(&self.assignment),
            "timings": {
                "stages": self.timings,
                "table": {
                    "n_eigs": self.config.n_eigs,
                    "decomposition": self.timings.decomposition(),
                    "algorithm1": self.timings.factorize,
                    "separation": self.timings.separate,
                },
            },
        })
    }
}

/// Writes the criterion scatter for each requested `k`.
pub fn write_criteria(dir: &Path, dec: &SpectralDecomposition, triplets: &TripletList, ks: Option<&[usize]>) -> Result<()> {
    let ks: Vec<usize> = match ks {
        Some(ks) => ks.to_vec(),
        None => triplets.triplets.iter().map(|t| t.k).collect(),
    };
    for k in ks {
        io::write_criterion(&dir.join(format!("criterion_k{k}.csv")), &criterion_scatter(dec, k)?)?;
    }
    Ok(())
}

/// Writes `embedding_factor{0,1}.csv` and returns the member lists.
pub fn write_embeddings(
    dir: &Path,
    cloud_latent: Option<(&DMatrix<f64>, &[String])>,
    dec: &SpectralDecomposition,
    assignment: &FactorAssignment,
    dims: usize,
) -> Result<()> {
    let factors = embed_factors(dec, assignment, dims)?;
    for (f, (members, m)) in factors.iter().enumerate() {
        io::write_embedding(&dir.join(format!("embedding_factor{f}.csv")), m, members, cloud_latent)?;
    }
    Ok(())
}

fn run_stages(cfg: &PipelineConfig, dir: &Path, report: &mut Option<RunReport>) -> Result<()> {
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let cloud = prepare_cloud(cfg, &mut timings)?;
    let mut write_time = 0.0;
    timed(&mut write_time, || {
        std::fs::write(dir.join(io::CONFIG), cfg.to_toml())?;
        io::write_cloud(dir, &cloud)
    })
    .map_err(|e| e.in_stage("generate"))?;

    let dec = decompose(&cloud, cfg, &mut timings)?;
    let mut w = 0.0;
    timed(&mut w, || {
        io::write_decomposition(dir, &dec)?;
        io::write_report(&dir.join(SPECTRAL_META), &spectral_meta(dec.epsilon(), cfg.resolved_neighbors(cloud.n()), cfg))
    })
    .map_err(|e| e.in_stage("decompose"))?;
    write_time += w;

    let triplets = timed(&mut timings.factorize, || find_triplets(&dec, &cfg.factorization()))
        .map_err(|e| e.in_stage("factorize"))?;
    timed(&mut w, || {
        io::write_triplets(&dir.join(io::TRIPLETS), &triplets)?;
        write_criteria(dir, &dec, &triplets, cfg.criterion_k.as_deref())
    })
    .map_err(|e| e.in_stage("factorize"))?;
    write_time += w;

    let assignment = timed(&mut timings.separate, || {
        let sep = build_separability(&triplets)?;
        let cut = max_cut(&sep, &cfg.sdp_options())?;
        assign_factors(&triplets, &cut)
    })
    .map_err(|e| e.in_stage("separate"))?;
    timed(&mut w, || io::write_assignment(&dir.join(io::ASSIGNMENT), &assignment)).map_err(|e| e.in_stage("separate"))?;
    write_time += w;

    let latent = cloud.latent().map(|l| (l, cloud.latent_names()));
    timed(&mut timings.embed, || write_embeddings(dir, latent, &dec, &assignment, cfg.embed_dims))
        .map_err(|e| e.in_stage("embed"))?;

    timings.write = write_time;
    timings.total = start.elapsed().as_secs_f64();
    let r = RunReport {
        config: cfg.clone(),
        epsilon: dec.epsilon(),
        n_points: cloud.n(),
        timings,
        triplets,
        assignment,
    };
    io::write_report(&dir.join(io::REPORT), &r.to_json()).map_err(|e| e.in_stage("report"))?;
    *report = Some(r);
    Ok(())
}

/// File with the resolved bandwidth and graph settings of a decomposition.
pub const SPECTRAL_META: &str = "spectral.json";

pub fn spectral_meta(epsilon: f64, neighbors: Option<usize>, cfg: &PipelineConfig) -> serde_json::Value {
    json!({
        "epsilon": epsilon,
        "neighbors": neighbors,
        "density_normalization": cfg.density_normalization,
        "n_eigs": cfg.n_eigs,
    })
}

/// Runs every stage, writing all outputs into `config.output_dir`. On
/// failure the files written so far are kept next to a `FAILED` marker.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    let dir = config.output_dir.as_path();
    std::fs::create_dir_all(dir)?;
    let marker = dir.join(io::FAILED);
    if marker.exists() {
        std::fs::remove_file(&marker)?;
    }
    let mut report = None;
    match run_stages(config, dir, &mut report) {
        Ok(()) => Ok(report.expect("report set on success")),
        Err(e) => {
            std::fs::write(&marker, format!("{e}\n"))?;
            Err(e)
        }
    }
}

/// One row of the timing table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n_eigs: usize,
    pub decomposition: f64,
    pub algorithm1: f64,
    pub separation: f64,
    pub triplets: usize,
    pub visited_pairs: u64,
}

/// Times the three stages for each `N` on the configured dataset. With
/// `reuse_decomposition` the spectrum is computed once for the largest `N`
/// and truncated for the others (their decomposition column is then 0).
pub fn bench(cfg: &PipelineConfig, sizes: &[usize], reuse_decomposition: bool) -> Result<Vec<BenchRow>> {
    let mut t = StageTimings::default();
    let cloud = prepare_cloud(cfg, &mut t)?;
    let largest = sizes.iter().copied().max().ok_or_else(|| Error::invalid("no sizes to benchmark"))?;
    let shared = if reuse_decomposition {
        let mut c = cfg.clone();
        c.n_eigs = largest;
        let mut tt = StageTimings::default();
        let dec = decompose(&cloud, &c, &mut tt)?;
        Some((dec, tt.decomposition()))
    } else {
        None
    };
    let mut rows = Vec::new();
    for &n_eigs in sizes {
        let mut c = cfg.clone();
        c.n_eigs = n_eigs;
        c.validate()?;
        let mut tt = StageTimings::default();
        let (dec, dec_time) = match &shared {
            Some((d, time)) => (d.truncated(n_eigs)?, if n_eigs == largest { *time } else { 0.0 }),
            None => {
                let d = decompose(&cloud, &c, &mut tt)?;
                (d, tt.decomposition())
            }
        };
        let triplets = timed(&mut tt.factorize, || find_triplets(&dec, &c.factorization()))?;
        // an empty triplet list still yields a valid Algorithm 1 timing
        if !triplets.is_empty() {
            timed(&mut tt.separate, || {
                let cut = max_cut(&build_separability(&triplets)?, &c.sdp_options())?;
                assign_factors(&triplets, &cut)
            })?;
        }
        rows.push(BenchRow {
            n_eigs,
            decomposition: dec_time,
            algorithm1: tt.factorize,
            separation: tt.separate,
            triplets: triplets.len(),
            visited_pairs: triplets.visited_pairs,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_and_defaults() {
        let cfg = PipelineConfig::rectangle_example("x");
        let back = PipelineConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial = PipelineConfig::from_toml("n_eigs = 12\n[epsilon]\nmode = \"auto-median\"\n").unwrap();
        assert_eq!(partial.n_eigs, 12);
        assert_eq!(partial.epsilon, EpsilonMode::AutoMedian { scale: 1.0 });
        assert_eq!(partial.delta, 0.5);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = PipelineConfig::rectangle_example("x");
        cfg.gamma = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::rectangle_example("x");
        cfg.epsilon = EpsilonMode::Fixed { value: -1.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn neighbors_rule() {
        let mut cfg = PipelineConfig::rectangle_example("x");
        assert_eq!(cfg.resolved_neighbors(5000), Some(128));
        cfg.neighbors = None;
        assert_eq!(cfg.resolved_neighbors(2000), None);
        assert_eq!(cfg.resolved_neighbors(2001), Some(DEFAULT_NEIGHBORS));
    }
}
