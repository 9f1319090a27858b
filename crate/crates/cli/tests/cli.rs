use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const NAMES: [&str; 6] = [
    "quadratic_pl",
    "leaky_neuron_pl",
    "deep_linear_pl",
    "smooth_leaky_margin_pl",
    "single_relu_proxy_convexity",
    "ntk_selfbound",
];

fn proxyopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxyopt")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn list_is_stable_and_complete() {
    let a = proxyopt(&["list"]);
    let b = proxyopt(&["list"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let listed: Vec<&str> = text.lines().filter_map(|l| l.split_whitespace().next()).collect();
    for name in NAMES {
        assert!(listed.contains(&name), "{name} missing from list");
    }
}

#[test]
fn unknown_experiment_exits_3_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = proxyopt(&["run", "--experiment", "nope", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 3);
    assert!(!out.exists());
    assert_eq!(code(&proxyopt(&["certify", "--experiment", "nope"])), 3);
}

#[test]
fn bad_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(r#"{{"experiment": "quadratic_pl", "overrides": {{"bogus": 1.0}}, "out_dir": {:?}}}"#, out),
    )
    .unwrap();
    assert_eq!(code(&proxyopt(&["run", "--config", cfg.to_str().unwrap()])), 4);
    assert!(!out.exists());

    fs::write(&cfg, r#"{"experiment": "quadratic_pl", "extra": 1}"#).unwrap();
    assert_eq!(code(&proxyopt(&["run", "--config", cfg.to_str().unwrap()])), 4);

    let res = proxyopt(&["run", "--experiment", "quadratic_pl", "--eps=-1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 4);
    assert_eq!(code(&proxyopt(&["run"])), 4);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = proxyopt(&["run", "--experiment", "leaky_neuron_pl", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    for file in ["trajectory.csv", "certs.json", "dataset.csv", "dataset.meta.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file} differs");
    }
    let mut ra = read_json(&a.join("report.json"));
    let mut rb = read_json(&b.join("report.json"));
    ra.as_object_mut().unwrap().remove("runtime_ms");
    rb.as_object_mut().unwrap().remove("runtime_ms");
    assert_eq!(ra, rb);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out");
    fs::write(&cfg, r#"{"experiment": "quadratic_pl", "seed": 1, "eps": 0.1}"#).unwrap();
    let res = proxyopt(&["run", "--config", cfg.to_str().unwrap(), "--eps", "1e-6", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["eps"].as_f64(), Some(1e-6));
    assert_eq!(report["seed"].as_u64(), Some(1));
    assert!(out.join("trajectory.csv").exists());
    assert!(out.join("certs.json").exists());
}

#[test]
fn certify_exit_codes() {
    let ok = proxyopt(&["certify", "--experiment", "quadratic_pl", "--points", "20"]);
    assert_eq!(code(&ok), 0);
    let certs: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(certs.as_array().is_some_and(|a| !a.is_empty()));

    let red = proxyopt(&["certify", "--experiment", "single_relu_proxy_convexity", "--points", "50"]);
    let certs: Value = serde_json::from_slice(&red.stdout).unwrap();
    let gating_fail = certs
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["gating"].as_bool() == Some(true) && c["pass"].as_bool() == Some(false));
    assert_eq!(code(&red), if gating_fail { 1 } else { 0 });
}
