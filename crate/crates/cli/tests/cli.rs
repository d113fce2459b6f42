use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ctkrylov::sparse::mm::mm_read;

const TINY: &str = "\
n_pixels = 16
angles = 0:6:180
n_det = 24
noise_level = 0.01
max_iter = 15
";

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("exp.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ctkrylov"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn summary_field(dir: &Path, field: &str) -> String {
    let text = fs::read_to_string(dir.join("out/summary.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == field).unwrap();
    row[i].to_string()
}

#[test]
fn bad_model_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "model_a = cone\n", &["solve"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model_a"), "{err}");
}

#[test]
fn unknown_key_and_zero_max_iter_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "flux = 3\n", &["solve"]).status.code(), Some(2));
    let cfg = format!("{TINY}max_iter = 0\n").replace("max_iter = 15\n", "");
    assert_eq!(run(dir.path(), &cfg, &["solve"]).status.code(), Some(2));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_ctkrylov"))
        .args(["--config", "/nonexistent/exp.cfg", "solve"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn build_matrix_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), TINY, &["build-matrix", "--models", "strip,line,joseph"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for line in summary.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let m = mm_read(dir.path().join("out").join(f[1])).unwrap();
        assert_eq!(m.nrows().to_string(), f[2]);
        assert_eq!(m.ncols().to_string(), f[3]);
        assert_eq!(m.nnz().to_string(), f[4]);
        assert_eq!((m.nrows(), m.ncols()), (720, 256));
    }
}

#[test]
fn storage_is_k_times_m_for_ab_and_k_times_n_for_ba() {
    for (solver, len) in [("ab", 720), ("ba", 256)] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(dir.path(), &format!("{TINY}solver = {solver}\n"), &["solve"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let k: usize = summary_field(dir.path(), "iterations").parse().unwrap();
        let storage: usize = summary_field(dir.path(), "storage").parse().unwrap();
        assert_eq!(storage, k * len, "{solver}");
        for f in ["trace.csv", "recon.pgm", "recon_best.pgm"] {
            assert!(dir.path().join("out").join(f).exists(), "{f}");
        }
        let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), k + 1);
    }
}

#[test]
fn sweep_requires_threshold_back_projector() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), TINY, &["sweep-tau"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &format!("{TINY}model_b = threshold:0\n"), &["sweep-tau", "--taus", "0,0.2,0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let um: Vec<f64> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(um[0], 0.0);
    assert!(um.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn analyze_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{TINY}model_b = strip\n");
    for what in ["picard", "spectrum", "coeffs", "bound"] {
        let out = run(dir.path(), &cfg, &["analyze", "--what", what, "--ks", "1,3"]);
        assert!(out.status.success(), "{what}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let o = dir.path().join("out");
    let sigma: Vec<f64> = fs::read_to_string(o.join("picard.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(sigma.windows(2).all(|w| w[1] <= w[0]));
    let spec = fs::read_to_string(o.join("spectrum_summary.csv")).unwrap();
    let neg = spec.lines().nth(1).unwrap().split(',').nth(3).unwrap();
    assert_eq!(neg, "0");
    let coeffs = fs::read_to_string(o.join("coeffs.csv")).unwrap();
    assert!(coeffs.starts_with("i,sigma,exact,k_1,k_3"));
    let bound = fs::read_to_string(o.join("bound.csv")).unwrap();
    assert_eq!(bound.lines().count(), 4);
}
