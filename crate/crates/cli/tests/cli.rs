//! End-to-end runs of the `aniso` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aniso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso")).args(args).output().expect("binary runs")
}

fn out_dir(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn solve_writes_errors_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(tmp.path());
    let r = aniso(&["solve", "--case", "u1", "--uniform", "16", "-o", &o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(tmp.path().join("solve.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "289");
    let energy: f64 = row[2].parse().unwrap();
    assert!(energy > 0.0 && energy.is_finite());
    let finer = tempfile::tempdir().unwrap();
    assert!(aniso(&["solve", "--case", "u1", "--uniform", "32", "-o", &out_dir(finer.path())]).status.success());
    let csv = fs::read_to_string(finer.path().join("solve.csv")).unwrap();
    let finer_energy: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(finer_energy < energy, "{finer_energy} vs {energy}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config"]["uniform"], 16);
    assert!(manifest["failure"].is_null());
    for f in ["mesh.mesh", "solution.vtk"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn estimate_dumps_one_row_per_element() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(tmp.path());
    let r = aniso(&["estimate", "--uniform", "8", "-o", &o]);
    assert!(r.status.success());
    let csv = fs::read_to_string(tmp.path().join("estimates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 128);
    let summary: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!(summary["effectivity"].as_f64().unwrap() > 0.0);
}

#[test]
fn adapt_is_deterministic() {
    let run = || {
        let tmp = tempfile::tempdir().unwrap();
        let o = out_dir(tmp.path());
        let r = aniso(&["adapt", "--case", "u1", "--tol", "1.0", "--max-iters", "3", "-o", &o]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        let files = ["report.csv", "summary.csv", "final.mesh"].map(|f| fs::read(tmp.path().join(f)).unwrap());
        assert!(tmp.path().join("snapshots").read_dir().unwrap().count() >= 2);
        files
    };
    assert_eq!(run(), run());
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "case = \"u2\"\nalpha = 50.0\nuniform = 6\n[metric]\nintersection = false\n").unwrap();
    let o = out_dir(&tmp.path().join("out"));
    let r = aniso(&["solve", "-c", &cfg.to_string_lossy(), "--set", "uniform=5", "-o", &o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["case"], "u2");
    assert_eq!(manifest["config"]["uniform"], 5);
    assert_eq!(manifest["config"]["metric"]["intersection"], false);
}

#[test]
fn starting_mesh_can_come_from_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    let first = out_dir(&tmp.path().join("a"));
    assert!(aniso(&["solve", "--uniform", "5", "-o", &first]).status.success());
    let mesh = tmp.path().join("a/mesh.mesh");
    let second = out_dir(&tmp.path().join("b"));
    let r = aniso(&["solve", "--mesh", &mesh.to_string_lossy(), "-o", &second]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(fs::read(tmp.path().join("a/solve.csv")).unwrap(), fs::read(tmp.path().join("b/solve.csv")).unwrap());
}

#[test]
fn bad_configuration_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(tmp.path());
    for args in [
        vec!["solve", "--tol", "-1", "-o", &o],
        vec!["solve", "--set", "colour=red", "-o", &o],
        vec!["adapt", "--method", "magic", "-o", &o],
        vec!["solve", "--mesh", "/nonexistent/file.mesh", "-o", &o],
        vec!["frobnicate"],
    ] {
        let r = aniso(&args);
        assert_eq!(r.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
    }
}

#[test]
fn study_writes_one_row_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(tmp.path());
    let r = aniso(&[
        "study",
        "--methods",
        "residual-element,hessian-metric",
        "--tols",
        "1.0",
        "--e-ds",
        "2e-2,1e-2",
        "--max-iters",
        "2",
        "-o",
        &o,
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(tmp.path().join("study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(',')), "timings are left out by default");
}

#[test]
fn runtime_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let r = aniso(&["solve", "--uniform", "4", "-o", &blocker.join("out").to_string_lossy()]);
    assert_eq!(r.status.code(), Some(2));
}
