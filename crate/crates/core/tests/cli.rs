use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use manifactor::pipeline::PipelineConfig;

const BIN: &str = env!("CARGO_BIN_EXE_manifactor");

fn small_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = PipelineConfig::torus_example("unused");
    cfg.generator.n = 1200;
    cfg.neighbors = Some(40);
    cfg.n_eigs = 12;
    cfg.embed_dims = 1;
    let path = dir.join("small.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn effective(args: &[&str]) -> PipelineConfig {
    let mut full = vec!["config"];
    full.extend_from_slice(args);
    PipelineConfig::from_toml(&ok(&full)).unwrap()
}

#[test]
fn staged_commands_reproduce_a_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let whole = tmp.path().join("whole");
    let staged = tmp.path().join("staged");
    let common = ["--config", cfg, "--epsilon", "0.08", "--seed", "3"];

    let with_dir = |cmd: &str, dir: &Path| {
        let mut a = vec![cmd];
        a.extend_from_slice(&common);
        a.extend_from_slice(&["--output-dir", dir.to_str().unwrap()]);
        ok(&a);
    };
    with_dir("run", &whole);
    for cmd in ["generate", "decompose", "factorize", "separate", "embed"] {
        with_dir(cmd, &staged);
    }

    for entry in fs::read_dir(&staged).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        if name == "config.toml" {
            continue;
        }
        let a = fs::read(whole.join(&name)).unwrap_or_else(|_| panic!("{name} missing from the full run"));
        let b = fs::read(staged.join(&name)).unwrap();
        assert!(a == b, "{name} differs between staged and full runs");
    }
    assert!(whole.join("report.json").exists());
    assert!(staged.join("embedding_factor0.csv").exists());
}

#[test]
fn flags_override_file_which_overrides_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let mut file_cfg = PipelineConfig::torus_example("from-file");
    file_cfg.delta = 0.7;
    file_cfg.gamma = 0.65;
    let path = tmp.path().join("c.toml");
    fs::write(&path, file_cfg.to_toml()).unwrap();
    let p = path.to_str().unwrap();

    let preset = effective(&["--preset", "image"]);
    assert_eq!(preset, PipelineConfig::image_example(preset.output_dir.clone()));

    let from_file = effective(&["--config", p]);
    assert_eq!(from_file.delta, 0.7);
    assert_eq!(from_file.gamma, 0.65);

    let flagged = effective(&[
        "--config", p, "--delta", "0.3", "--n-eigs", "9", "--neighbors", "17", "--density-normalize", "false", "--epsilon",
        "auto:0.25", "--seed", "11",
    ]);
    assert_eq!(flagged.delta, 0.3);
    assert_eq!(flagged.gamma, 0.65);
    assert_eq!(flagged.n_eigs, 9);
    assert_eq!(flagged.neighbors, Some(17));
    assert!(!flagged.density_normalization);
    assert_eq!(flagged.epsilon, manifactor::pipeline::EpsilonMode::AutoMedian { scale: 0.25 });
    assert_eq!(flagged.seed, 11);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let out = run(&["run", "--gamma", "1.5", "--output-dir", "/nonexistent/never"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = run(&["config", "--config", "/nonexistent/file.toml"]);
    assert_eq!(out.status.code(), Some(1));

    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["decompose", "--output-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "decompose without a cloud should fail");
}

#[test]
fn bench_writes_a_timing_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let dir = tmp.path().join("bench");
    let stdout = ok(&[
        "bench", "--config", cfg.to_str().unwrap(), "--epsilon", "0.08", "--sizes", "4,8", "--output-dir", dir.to_str().unwrap(),
    ]);
    assert!(!stdout.is_empty());
    let table = fs::read_to_string(dir.join("bench.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "{table}");
    assert!(lines[1].starts_with("4,") && lines[2].starts_with("8,"));
}
