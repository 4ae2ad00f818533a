use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn graphon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    full.extend(["--out", out]);
    graphon(&full)
}

fn csv_column(path: &Path, column: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(column).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn minmax_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["eigen", "--graphon", "minmax", "--M", "2000", "--k", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let values = csv_column(&dir.path().join("eigenvalues.csv"), 1);
    for (v, expected) in values.iter().zip([0.101321, 0.025330, 0.011258]) {
        assert!((v - expected).abs() < 1e-6, "{v} vs {expected}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "eigen");
    assert_eq!(manifest["config"]["M"], 2000);
}

#[test]
fn empty_network_plays_standalone() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["solve-network", "--er", "0", "--N", "5", "--alpha", "0.5", "--beta", "1"],
    );
    assert!(out.status.success());
    let profile = csv_column(&dir.path().join("equilibrium.csv"), 2);
    assert_eq!(profile, vec![1.0; 5]);
}

#[test]
fn distance_runs_are_reproducible() {
    let args = [
        "distance-exp", "--graphon", "minmax", "--alpha", "0.5", "--beta", "1", "--Ns", "50,100", "--trials", "3",
        "--seed", "7",
    ];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_in(a.path(), &args).status.success());
    let mut with_jobs = args.to_vec();
    with_jobs.extend(["--jobs", "1"]);
    assert!(run_in(b.path(), &with_jobs).status.success());
    for name in ["distances.csv", "distance_stats.csv", "rate_fit.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"graphon": "er", "p": 0.5, "alpha": 0.8, "M": 40, "c-per-agent": 0.02}"#).unwrap();
    let out = run_in(
        dir.path(),
        &["solve-graphon", "--config", config.to_str().unwrap(), "--alpha", "1.0"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let profile = csv_column(&dir.path().join("equilibrium.csv"), 2);
    assert_eq!(profile.len(), 40);
    assert!(profile.iter().all(|v| (v - 2.0).abs() < 1e-10));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(graphon(&["eigen", "--bogus"]).status.code(), Some(1));
    assert_eq!(graphon(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(graphon(&["--help"]).status.code(), Some(0));
    let violated = run_in(dir.path(), &["solve-network", "--er", "1", "--N", "5", "--alpha", "1.5"]);
    assert_eq!(violated.status.code(), Some(1));
    let bad_graphon = run_in(dir.path(), &["eigen", "--graphon", "no-such-file.json"]);
    assert_eq!(bad_graphon.status.code(), Some(1));
    // A substitutes game that needs projection but gets no iterations.
    let network = dir.path().join("star.json");
    fs::write(
        &network,
        r#"{"matrix": [[0,1,1,1,1,1],[1,0,0.05,0.05,0.05,0.05],[1,0.05,0,0.05,0.05,0.05],
                       [1,0.05,0.05,0,0.05,0.05],[1,0.05,0.05,0.05,0,0.05],[1,0.05,0.05,0.05,0.05,0]]}"#,
    )
    .unwrap();
    let starved = run_in(
        dir.path(),
        &["solve-network", "--network", network.to_str().unwrap(), "--alpha", "-2.4", "--max-iter", "1"],
    );
    assert_eq!(starved.status.code(), Some(2), "{}", String::from_utf8_lossy(&starved.stderr));
}

#[test]
fn sample_and_intervene_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sampled = run_in(dir.path(), &["sample", "--graphon", "minmax", "--N", "30", "--seed", "2", "--format", "json"]);
    assert!(sampled.status.success());
    let network = dir.path().join("simple.json");
    let out = run_in(
        dir.path(),
        &["intervene", "--network", network.to_str().unwrap(), "--alpha", "3", "--c-per-agent", "0.05", "--format", "json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("interventions.json")).unwrap()).unwrap();
    let policies: Vec<&str> = results.as_array().unwrap().iter().map(|r| r["policy"].as_str().unwrap()).collect();
    assert_eq!(policies, ["none", "homogeneous", "network-heuristic", "graphon-heuristic", "optimal"]);
    let welfare = |i: usize| results[i]["welfare"].as_f64().unwrap();
    assert!(welfare(4) >= welfare(1).max(welfare(2)).max(welfare(3)) - 1e-9);
}
