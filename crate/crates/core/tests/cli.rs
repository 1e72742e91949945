use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn ahmass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahmass")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn shield_config(dir: &Path) -> String {
    let path = dir.join("shield.json");
    let config = serde_json::json!({
        "command": "shield",
        "mode": "initial_data",
        "gamma": 0.5,
        "cap": null,
        "metric": null,
        "regions": { "r_u0": 1.0, "r_u1": 3.0, "r_u2": 5.0 },
        "data": {
            "data": "explicit",
            "k_kind": "trace_constant",
            "c": -(1.0f64 + 1.5 / 12.0).sqrt(),
            "metric": {
                "kind": "warped",
                "n": 4,
                "profile": { "preset": "hyperbolic" },
                "grid": { "r0": 0.1, "r_max": 7.0, "count": 1381, "spacing": "uniform-r" }
            }
        }
    });
    std::fs::write(&path, config.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn hyperbolic_mass_is_zero() {
    let out = ahmass(&["mass", "--preset", "hyperbolic", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["result"]["class"]["label"], "zero");
    let comps = v["result"]["energy_momentum"]["components"].as_array().unwrap();
    assert_eq!(comps.len(), 5);
    assert!(comps.iter().all(|c| num(c) == 0.0));
}

#[test]
fn wang_mass_is_future_timelike() {
    let out = ahmass(&["mass", "--preset", "wang", "--mu0", "0.3", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["class"]["label"], "future-timelike");
    let out = ahmass(&["mass", "--preset", "wang", "--mu0", "-0.3", "--n", "4"]);
    assert_eq!(json(&out)["result"]["class"]["label"], "past-timelike");
}

#[test]
fn shield_from_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shield_config(dir.path());
    let report = dir.path().join("report.json");
    let out = ahmass(&["shield", "--config", &cfg, "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["result"]["pass"], true);
    assert!((num(&v["result"]["shield"]["t_star"]) - 3.848).abs() < 1e-3);
    assert!((num(&v["result"]["D0"]) - 2.0).abs() < 1e-9);
}

#[test]
fn bad_nesting_is_an_input_error() {
    let out = ahmass(&["shield", "--r-u0", "3", "--r-u1", "1", "--r-u2", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["kind"], "region-nesting");
}

#[test]
fn kappa_at_the_limit_is_rejected() {
    let out = ahmass(&["boundary", "--n", "4", "--d0", "2", "--d1", "2", "--kappa", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ahmass(&["boundary", "--n", "4", "--d0", "2", "--d1", "2", "--kappa", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn output_is_deterministic_and_labelled() {
    let args = ["mass", "--preset", "schwarzschild_ads", "--mass", "0.2", "--n", "4", "--r0", "1"];
    let (a, b) = (ahmass(&args), ahmass(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["tool"], "ahmass");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let hash = v["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    let other = json(&ahmass(&["mass", "--preset", "schwarzschild_ads", "--mass", "0.3", "--n", "4", "--r0", "1"]));
    assert_ne!(other["config_hash"], v["config_hash"]);
}

#[test]
fn curvature_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let out = ahmass(&["curvature", "--preset", "acg", "--a", "0.5", "--n", "4", "--count", "11", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,scalar_curvature,excess"));
    assert_eq!(lines.count(), 11);
}
