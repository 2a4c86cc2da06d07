//! Command-line front end. Every subcommand reads and writes the files of
//! one output directory, so `generate | decompose | factorize | separate |
//! embed` chained over the same `--output-dir` reproduces `run`.
//!
//! Configuration precedence: built-in preset < `--config` file < flags.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use manifactor::factorize::find_triplets;
use manifactor::io;
use manifactor::pipeline::{
    bench, decompose, prepare_cloud, run_pipeline, spectral_meta, write_criteria, write_embeddings, BenchRow,
    EpsilonMode, PipelineConfig, StageTimings, SPECTRAL_META,
};
use manifactor::separate::{assign_factors, build_separability, max_cut};
use manifactor::{Error, Result};

#[derive(Parser)]
#[command(name = "manifactor", version, about = "Split a point cloud's Laplacian eigenvectors into two manifold factors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset (and apply PCA if configured).
    Generate(Common),
    /// Build the kernel graph and compute the low spectrum.
    Decompose(Common),
    /// Search the spectrum for product eigenvectors.
    Factorize(Common),
    /// Max-Cut the factor eigenvectors into two groups.
    Separate(Common),
    /// Write the per-factor eigenmap embeddings.
    Embed(Common),
    /// All stages end to end, plus report.json.
    Run(Common),
    /// Stage timings for several eigenvector counts.
    Bench(BenchArgs),
    /// Print the effective configuration as TOML.
    Config(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Rectangle,
    Runtime,
    Torus,
    Image,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in configuration used as the base layer.
    #[arg(long, value_enum, default_value = "rectangle")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    /// Kernel bandwidth: a number, `auto`, or `auto:SCALE` (median rule).
    #[arg(long, value_parser = parse_epsilon)]
    epsilon: Option<EpsilonMode>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of nontrivial eigenvectors N.
    #[arg(long)]
    n_eigs: Option<usize>,
    /// Nearest-neighbour truncation of the kernel.
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Apply the density-invariant kernel normalization.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    density_normalize: Option<bool>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Eigenvector counts to time.
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400])]
    sizes: Vec<usize>,
    /// Repetitions averaged per row; repetition `t` uses seed `seed + t`.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Recompute the spectrum for every N instead of truncating the largest.
    #[arg(long)]
    no_reuse: bool,
}

fn parse_epsilon(s: &str) -> std::result::Result<EpsilonMode, String> {
    let auto = |scale: f64| {
        if scale > 0.0 && scale.is_finite() {
            Ok(EpsilonMode::AutoMedian { scale })
        } else {
            Err(format!("epsilon scale must be positive, got {scale}"))
        }
    };
    match s {
        "auto" => auto(1.0),
        _ if s.starts_with("auto:") => auto(s[5..].parse().map_err(|e| format!("bad scale in `{s}`: {e}"))?),
        _ => {
            let v: f64 = s.parse().map_err(|e| format!("bad epsilon `{s}`: {e}"))?;
            if v > 0.0 && v.is_finite() {
                Ok(EpsilonMode::Fixed { value: v })
            } else {
                Err(format!("epsilon must be positive, got {v}"))
            }
        }
    }
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => match self.preset {
                Preset::Rectangle => PipelineConfig::rectangle_example("out"),
                Preset::Runtime => PipelineConfig::runtime_example("out"),
                Preset::Torus => PipelineConfig::torus_example("out"),
                Preset::Image => PipelineConfig::image_example("out"),
            },
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.n_eigs {
            cfg.n_eigs = v;
        }
        if let Some(v) = self.neighbors {
            cfg.neighbors = Some(v);
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.density_normalize {
            cfg.density_normalization = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &PipelineConfig) -> Result<&Path> {
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir)?;
    Ok(dir)
}

fn generate(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let cloud = prepare_cloud(cfg, &mut StageTimings::default())?;
    io::write_cloud(dir, &cloud)?;
    std::fs::write(dir.join(io::CONFIG), cfg.to_toml())?;
    println!("{}", json!({ "n": cloud.n(), "dim": cloud.dim(), "output_dir": dir }));
    Ok(())
}

fn decompose_cmd(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let cloud = io::read_cloud(dir).map_err(|e| e.in_stage("decompose"))?;
    let mut t = StageTimings::default();
    let dec = decompose(&cloud, cfg, &mut t)?;
    io::write_decomposition(dir, &dec)?;
    io::write_report(&dir.join(SPECTRAL_META), &spectral_meta(dec.epsilon(), cfg.resolved_neighbors(cloud.n()), cfg))?;
    println!(
        "{}",
        json!({ "epsilon": dec.epsilon(), "n_eigs": dec.n_eigs(), "kernel": t.kernel, "eigensolve": t.eigensolve })
    );
    Ok(())
}

fn load_decomposition(dir: &Path) -> Result<manifactor::SpectralDecomposition> {
    let meta = io::read_json_value(&dir.join(SPECTRAL_META))?;
    let eps = meta["epsilon"].as_f64().ok_or_else(|| Error::Format {
        path: dir.join(SPECTRAL_META).display().to_string(),
        reason: "missing numeric `epsilon`".into(),
    })?;
    io::read_decomposition(dir, eps)
}

fn factorize_cmd(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let dec = load_decomposition(dir).map_err(|e| e.in_stage("factorize"))?;
    let start = Instant::now();
    let triplets = find_triplets(&dec, &cfg.factorization()).map_err(|e| e.in_stage("factorize"))?;
    let elapsed = start.elapsed().as_secs_f64();
    io::write_triplets(&dir.join(io::TRIPLETS), &triplets)?;
    write_criteria(dir, &dec, &triplets, cfg.criterion_k.as_deref())?;
    println!(
        "{}",
        json!({ "triplets": triplets.len(), "visited_pairs": triplets.visited_pairs, "seconds": elapsed })
    );
    Ok(())
}

fn separate_cmd(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let triplets = io::read_triplets(&dir.join(io::TRIPLETS)).map_err(|e| e.in_stage("separate"))?;
    let assignment = (|| {
        let cut = max_cut(&build_separability(&triplets)?, &cfg.sdp_options())?;
        assign_factors(&triplets, &cut)
    })()
    .map_err(|e| e.in_stage("separate"))?;
    io::write_assignment(&dir.join(io::ASSIGNMENT), &assignment)?;
    println!("{}", io::assignment_json(&assignment));
    Ok(())
}

fn embed_cmd(cfg: &PipelineConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let dec = load_decomposition(dir).map_err(|e| e.in_stage("embed"))?;
    let assignment = io::read_assignment(&dir.join(io::ASSIGNMENT)).map_err(|e| e.in_stage("embed"))?;
    let latent_path = dir.join(io::LATENT);
    let latent = if latent_path.exists() { Some(io::read_table(&latent_path)?) } else { None };
    let latent_ref = latent.as_ref().map(|(names, m)| (m, names.as_slice()));
    write_embeddings(dir, latent_ref, &dec, &assignment, cfg.embed_dims).map_err(|e| e.in_stage("embed"))?;
    println!("{}", json!({ "dims": cfg.embed_dims, "factors": assignment.factors() }));
    Ok(())
}

fn run_cmd(cfg: &PipelineConfig) -> Result<()> {
    let report = run_pipeline(cfg)?;
    let t = report.timings;
    println!(
        "{}",
        json!({
            "output_dir": cfg.output_dir,
            "epsilon": report.epsilon,
            "triplets": report.triplets.len(),
            "factors": report.assignment.factors(),
            "timings": { "decomposition": t.decomposition(), "algorithm1": t.factorize, "separation": t.separate, "total": t.total },
        })
    );
    Ok(())
}

fn bench_cmd(args: &BenchArgs) -> Result<()> {
    let base = args.common.resolve()?;
    if args.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut sums: Vec<BenchRow> = Vec::new();
    for t in 0..args.trials {
        let mut cfg = base.clone();
        cfg.seed = base.seed + t;
        let rows = bench(&cfg, &args.sizes, !args.no_reuse)?;
        if sums.is_empty() {
            sums = rows;
        } else {
            for (s, r) in sums.iter_mut().zip(rows) {
                s.decomposition += r.decomposition;
                s.algorithm1 += r.algorithm1;
                s.separation += r.separation;
                s.triplets += r.triplets;
                s.visited_pairs += r.visited_pairs;
            }
        }
    }
    let k = args.trials as f64;
    for s in &mut sums {
        s.decomposition /= k;
        s.algorithm1 /= k;
        s.separation /= k;
    }
    let dir = out_dir(&base)?;
    let mut w = csv::Writer::from_path(dir.join("bench.csv")).map_err(Error::from)?;
    w.write_record(["n_eigs", "decomposition", "algorithm1", "separation", "triplets", "visited_pairs"])
        .map_err(Error::from)?;
    println!("{:>5} {:>14} {:>10} {:>10} {:>9}", "N", "decomposition", "alg1", "sep+cut", "triplets");
    for r in &sums {
        println!(
            "{:>5} {:>14.3} {:>10.3} {:>10.4} {:>9}",
            r.n_eigs,
            r.decomposition,
            r.algorithm1,
            r.separation,
            r.triplets as f64 / k
        );
        w.write_record([
            r.n_eigs.to_string(),
            r.decomposition.to_string(),
            r.algorithm1.to_string(),
            r.separation.to_string(),
            (r.triplets as f64 / k).to_string(),
            (r.visited_pairs as f64 / k).to_string(),
        ])
        .map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bench(args) => bench_cmd(args),
        Command::Generate(c)
        | Command::Decompose(c)
        | Command::Factorize(c)
        | Command::Separate(c)
        | Command::Embed(c)
        | Command::Run(c)
        | Command::Config(c) => c.resolve().and_then(|cfg| match &cli.command {
            Command::Generate(_) => generate(&cfg),
            Command::Decompose(_) => decompose_cmd(&cfg),
            Command::Factorize(_) => factorize_cmd(&cfg),
            Command::Separate(_) => separate_cmd(&cfg),
            Command::Embed(_) => embed_cmd(&cfg),
            Command::Run(_) => run_cmd(&cfg),
            _ => {
                print!("{}", cfg.to_toml());
                Ok(())
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
