use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn chainkit(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainkit"))
        .args(args)
        .env("CHAINKIT_THREADS", threads)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulation_ignores_thread_count() {
    let model = data("gambler.json");
    let args = ["simulate", "--model", path(&model), "--paths", "64", "--steps", "200", "--seed", "3"];
    let one = chainkit(&args, "1");
    let four = chainkit(&args, "4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_ne!(one.stdout, chainkit(&["simulate", "--model", path(&model), "--paths", "64", "--steps", "200", "--seed", "4"], "1").stdout);
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind": "gambler", "params": {"a": 1.5, "K": 10}, "gamma": [[[5], 1.0]]}"#).unwrap();
    let out = chainkit(&["law", "--model", path(&bad), "--steps", "3"], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let missing = dir.path().join("missing.json");
    let out = chainkit(&["classify", "--model", path(&missing), "--trunc", "0:3"], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let out = chainkit(&["stationary", "--model", path(&data("twostate.json")), "--trunc", "3:1"], "1");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unconverged_adaptive_law_exits_with_three() {
    let out = chainkit(
        &["law", "--model", path(&data("purebirth.json")), "--time", "2", "--tol", "1e-6", "--max-states", "60"],
        "1",
    );
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("status,non-converged")));
}

#[test]
fn json_reports_parse() {
    let out = chainkit(&["classify", "--model", path(&data("miller.json")), "--trunc", "0:10"], "1");
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());

    let out = chainkit(
        &["lyapunov", "--model", path(&data("queue.json")), "--trunc", "0:40", "--cert", path(&data("queue_cert.json"))],
        "1",
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "holds-on-truncation");
}

#[test]
fn law_masses_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("law.csv");
    let out = chainkit(
        &["law", "--model", path(&data("twostate.json")), "--time", "1", "--trunc", "0:1", "--out", path(&out_file)],
        "1",
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_file).unwrap();
    let masses: Vec<f64> = text
        .lines()
        .filter_map(|l| l.split_once(','))
        .filter(|(state, _)| state.parse::<i64>().is_ok())
        .map(|(_, mass)| mass.parse().unwrap())
        .collect();
    let want = 0.5 * (1.0 + (-2.0f64).exp());
    assert_eq!(masses.len(), 2);
    assert!((masses[0] - want).abs() <= 1e-11);
    assert!((masses.iter().sum::<f64>() - 1.0).abs() <= 1e-11);
}
