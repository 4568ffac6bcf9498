//! The `obstacle-rd` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MINIMAL: &str = "\
# 1D, 64 nodes, simplex with n = 2
domain.nodes = 64
convex.type = simplex
components = 2
lambda = 0
epsilon = 0.1
t_final = 0.1
";

fn obstacle_rd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obstacle-rd")).args(args).output().expect("binary runs")
}

fn with_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    obstacle_rd(&args)
}

/// Relative path and contents of every file below `dir` except timings.
fn numeric_artifacts(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "timing.txt" {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn minimal_simulation_writes_a_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("out");
    let o = run("simulate", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let result = out.join("simulate");
    for file in ["config.txt", "trajectory/manifest.txt", "trajectory/state_000000.txt", "multipliers/manifest.txt"] {
        assert!(result.join(file).exists(), "missing {file}");
    }
    let manifest = fs::read_to_string(result.join("trajectory/manifest.txt")).unwrap();
    assert!(manifest.contains("format = trajectory-v1"), "{manifest}");
    assert!(fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".partial")));
}

#[test]
fn diagonal_diffusion_on_a_simplex_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_config(tmp.path(), &format!("{MINIMAL}diffusion.type = diagonal\ndiffusion.coefficients = 1,2\n"));
    let out = tmp.path().join("out");
    let o = run("simulate", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("`diffusion`"), "{stderr}");
    assert!(!out.join("simulate").exists());
}

#[test]
fn unknown_key_and_unreadable_config_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_config(tmp.path(), "lambdaa = 1\n");
    let o = run("simulate", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambdaa"));
    let o = run("simulate", &tmp.path().join("missing.cfg"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stored_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("a");
    assert_eq!(run("simulate", &cfg, &out, &[]).status.code(), Some(0));
    let stored = out.join("simulate/config.txt");
    let again = tmp.path().join("b");
    assert_eq!(run("simulate", &stored, &again, &[]).status.code(), Some(0));
    assert_eq!(fs::read(&stored).unwrap(), fs::read(again.join("simulate/config.txt")).unwrap());
}

#[test]
fn same_seed_gives_byte_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_config(tmp.path(), &format!("{MINIMAL}lambda = 1\npairs = 3\n").replace("lambda = 0\n", ""));
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for sub in ["simulate", "compare"] {
        assert_eq!(run(sub, &cfg, &a, &["--workers", "1"]).status.code(), Some(0));
        assert_eq!(run(sub, &cfg, &b, &["--workers", "3"]).status.code(), Some(0));
        assert_eq!(run(sub, &cfg, &c, &["--seed", "7"]).status.code(), Some(0));
        let first = numeric_artifacts(&a.join(sub));
        assert!(!first.is_empty());
        assert_eq!(first, numeric_artifacts(&b.join(sub)), "{sub}");
        assert_ne!(first, numeric_artifacts(&c.join(sub)), "{sub}");
    }
}

#[test]
fn compare_reports_pass_and_sweep_measures_the_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_config(
        tmp.path(),
        &format!("{MINIMAL}pairs = 2\nepsilon_list = 0.1,0.05,0.025\n").replace("epsilon = 0.1\n", ""),
    );
    let out = tmp.path().join("out");
    let o = run("compare", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let summary = fs::read_to_string(out.join("compare/reports/summary.tsv")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.starts_with("contraction")).count(), 3);
    let o = run("sweep", &cfg, &out, &[]);
    assert!(matches!(o.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("sweep/sweep.tsv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn verify_runs_selected_checks_and_dimension_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = with_config(
        tmp.path(),
        &format!(
            "{MINIMAL}checks = penalty_identities,scalar_reduction\nscheme.type = projection\nscheme.dt = 0.01\n\
             ensemble.size = 100\nensemble.horizon = 3\nensemble.transient = 2\nensemble.interval = 0.1\n"
        ),
    );
    let out = tmp.path().join("out");
    let o = run("verify", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("penalty.sandwich") && stdout.contains("scalar_reduction"), "{stdout}");
    let cfg = with_config(tmp.path(), &fs::read_to_string(&cfg).unwrap().replace("lambda = 0", "lambda = 5"));
    let o = run("dimension", &cfg, &out, &[]);
    assert!(matches!(o.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("dimension/box_counts.tsv").exists());
}
