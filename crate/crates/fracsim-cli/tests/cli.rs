//! End-to-end checks of the `fracsim` binary against the bundled data files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fracsim")
}

/// Repo root, so relative paths inside configs (data/...) resolve.
fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).parent().unwrap().parent().unwrap().to_path_buf()
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn analyze_reports_known_mean_segment_length() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&["analyze", "data/example2_traces.txt", "--out-dir", out_dir]);
    assert_ok(&out);

    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap())
            .unwrap();
    let mean = stats["segment_length_mean"].as_f64().unwrap();
    assert!((mean - 2289.27).abs() < 0.01, "mean segment length {mean}");

    for f in ["raw_histogram.csv", "folded_histogram.csv", "rose.svg", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "analyze");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_is_deterministic_and_seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let base = [
        "simulate",
        "-c",
        "data/example3_config.toml",
        "--set",
        "max_iterations=5",
    ];

    let mut args1: Vec<&str> = base.to_vec();
    let o1 = d("a");
    args1.extend(["--out-dir", &o1]);
    assert_ok(&run(&args1));

    let mut args2: Vec<&str> = base.to_vec();
    let o2 = d("b");
    args2.extend(["--out-dir", &o2]);
    assert_ok(&run(&args2));

    let n1 = std::fs::read(dir.path().join("a/network.json")).unwrap();
    let n2 = std::fs::read(dir.path().join("b/network.json")).unwrap();
    assert_eq!(n1, n2, "same config must give byte-identical networks");

    let mut args3: Vec<&str> = base.to_vec();
    let o3 = d("c");
    args3.extend(["--out-dir", &o3, "--seed", "9"]);
    assert_ok(&run(&args3));
    let n3 = std::fs::read(dir.path().join("c/network.json")).unwrap();
    assert_ne!(n1, n3, "--seed must change the realization");
}

#[test]
fn compare_network_with_itself_has_zero_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&[
        "compare",
        "data/example3_traces.txt",
        "data/example3_traces.txt",
        "--out-dir",
        out_dir,
    ]);
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comparison.json")).unwrap())
            .unwrap();
    let pairs = report["matching"]["pairs"].as_array().unwrap();
    assert!(!pairs.is_empty());
    for p in pairs {
        assert_eq!(p["deviation"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn seed_preview_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&[
        "seed-preview",
        "-c",
        "data/example3_config.toml",
        "--seed",
        "7",
        "--out-dir",
        out_dir,
    ]);
    assert_ok(&out);
    let csv = std::fs::read_to_string(dir.path().join("seeds.csv")).unwrap();
    assert!(csv.starts_with("x,y,azimuth\n"));
    assert!(csv.lines().count() > 10, "expected a few dozen seeds");
    assert!(dir.path().join("seeds.svg").exists());
}

#[test]
fn analyze_accepts_vertex_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("verts.csv");
    std::fs::write(&csv, "x,y\n0,0\n0,10\n---\n5,0\n5,10\n10,20\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["n_traces"], 2);
    assert_eq!(stats["n_segments"], 3);
}

#[test]
fn invalid_config_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "domain = [0.0, 0.0, 10.0, 10.0]\nnot_a_field = 1\nrng_seed = 1\nseeds = { mode = \"fixed_count\", count = 1 }\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate",
        "-c",
        cfg.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_input_file_exits_with_code_1() {
    let out = run(&["analyze", "data/no_such_file.txt"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_compares_breakthrough_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&[
        "verify",
        "--network",
        "data/example3_traces.txt",
        "--network",
        "data/example3_traces.txt",
        "--flow-config",
        "data/flow.toml",
        "--out-dir",
        out_dir,
    ]);
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comparison.json")).unwrap())
            .unwrap();
    assert_eq!(report["l2"].as_f64().unwrap(), 0.0);
    assert_eq!(report["time_delta"].as_f64().unwrap(), 0.0);
    assert!(dir.path().join("breakthrough_a.csv").exists());
    assert!(dir.path().join("breakthrough.svg").exists());
}
