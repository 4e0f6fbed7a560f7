use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn projlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projlab"))
        .args(args)
        .env_remove("PROJLAB_SEED")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const PARABOLA: &str = r#"{
    "name": "parabola",
    "algorithm": "ap",
    "sets": [
        {"family": "affine", "origin": [0.0, 0.0], "directions": [[1.0, 0.0]]},
        {"family": "epigraph-quadratic", "a0": 1.0, "a2": 1.0}
    ],
    "start": [1.0, 0.0],
    "diagnostics": {"angle": true, "rate": true}
}"#;

#[test]
fn run_then_diagnose() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PARABOLA);
    let out = tmp.path().join("run");
    let o = projlab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "points.jsonl", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["stop_reason"], "stationary");
    let r_star = summary["diagnostics"]["gap"]["r_star"].as_f64().unwrap();
    assert!((r_star - 1.0).abs() < 1e-6);
    assert_eq!(summary["diagnostics"]["rate"]["kind"], "linear");

    let o = projlab(&["diagnose", out.to_str().unwrap(), "--four-point", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["four_point"]["violations"].as_array().unwrap().len(), 0);
    assert!(out.join("diagnostics.json").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PARABOLA);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert!(projlab(&["run", &cfg, "--out", d.to_str().unwrap()]).status.success());
    }
    for f in ["trace.csv", "points.jsonl"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn errors_exit_with_one() {
    let o = projlab(&["run", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));

    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"name": "x", "algorithm": "dr", "sets": []}"#,
    );
    let o = projlab(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sets"));

    let o = projlab(&["diagnose", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    // Douglas-Rachford drifts off along the gap between disjoint lines.
    let cfg = write_config(
        tmp.path(),
        "div.json",
        r#"{"name": "dr-parallel", "algorithm": "dr",
            "sets": [{"family": "affine", "origin": [0.0, 0.0], "directions": [[1.0, 0.0]]},
                     {"family": "affine", "origin": [0.0, 1e7], "directions": [[1.0, 0.0]]}],
            "start": [0.0, 0.0]}"#,
    );
    let out = tmp.path().join("out");
    let o = projlab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["stop_reason"], "diverged");
}

#[test]
fn reach_and_presets() {
    let o = projlab(&[
        "reach",
        "--set",
        r#"{"family": "sphere-product", "m": [1.0]}"#,
        "--point",
        "1,0",
        "--direction",
        "-3,0",
        "--tol",
        "1e-12",
    ]);
    assert!(o.status.success());
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-10);

    let o = projlab(&["preset", "--list"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 11);

    let tmp = tempfile::tempdir().unwrap();
    let o = projlab(&[
        "preset",
        "em-demo",
        "averaged-demo",
        "--jobs",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("em-demo/summary.json").exists());
    assert!(tmp.path().join("averaged-demo/trace.csv").exists());
    assert_eq!(projlab(&["preset", "no-such-preset", "--dump"]).status.code(), Some(1));
}

#[test]
fn seed_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    // The origin is equidistant from the whole circle.
    let cfg = write_config(
        tmp.path(),
        "tie.json",
        r#"{"name": "tie", "algorithm": "ap",
            "sets": [{"family": "affine", "origin": [0.0, 0.0], "directions": [[1.0, 0.0], [0.0, 1.0]]},
                     {"family": "sphere-product", "m": [1.0]}],
            "start": [0.0, 0.0], "tie": {"mode": "seeded-random"}}"#,
    );
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = Command::new(env!("CARGO_BIN_EXE_projlab"))
            .args(["run", &cfg, "--out", out.to_str().unwrap()])
            .env("PROJLAB_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("trace.csv")).unwrap()
    };
    assert_eq!(run("5", "a"), run("5", "b"));
    let o = Command::new(env!("CARGO_BIN_EXE_projlab"))
        .args(["run", &cfg])
        .env("PROJLAB_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
