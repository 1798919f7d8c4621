//! The `facetflow` binary: subcommands, overrides and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use facetflow::scenario;

fn facetflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facetflow")).args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_shows_catalog_and_keys() {
    let out = facetflow(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for t in scenario::catalog() {
        assert!(text.contains(t.name), "{} missing", t.name);
    }
    assert!(text.contains("resolvent.a_list"));
}

#[test]
fn passing_run_exits_zero_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("tent");
    let out = facetflow(&["run", "evolve-tent-1d", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS lipschitz"));
    let m = manifest(&dir);
    assert_eq!(m["status"], "passed");
    assert_eq!(m["exit_code"], 0);
    for a in m["artifacts"].as_array().unwrap() {
        assert!(dir.join(a.as_str().unwrap()).exists());
    }
}

#[test]
fn quiet_suppresses_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = facetflow(&["run", "anisotropy-tour", "--quiet", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn seed_override_is_recorded_and_changes_random_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "random.cfg",
        "scenario = evolve\nname = random\ngrid.n = 64\ninitial.kind = random\nevolve.final_time = 0.001\nevolve.snapshots = 1\nseed = 1\n",
    );
    let run = |seed: &str| {
        let dir = tmp.path().join(format!("seed-{seed}"));
        let out = facetflow(&["run", &cfg, "--quiet", "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        (manifest(&dir), fs::read(dir.join("u_0000.grid")).unwrap())
    };
    let (m1, u1) = run("5");
    let (m2, u2) = run("6");
    assert_eq!(m1["seed"], 5);
    assert_eq!(m2["seed"], 6);
    assert_ne!(u1, u2);
    assert_eq!(run("5").1, u1);
}

#[test]
fn schema_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_key = write_config(tmp.path(), "bad.cfg", "scenario = evolve\ngrid.nn = 64\n");
    assert_eq!(facetflow(&["run", &bad_key, "--quiet", "--out", tmp.path().to_str().unwrap()]).status.code(), Some(2));
    let bad_value = write_config(tmp.path(), "value.cfg", "scenario = evolve\ngrid.n = many\n");
    assert_eq!(facetflow(&["run", &bad_value, "--quiet"]).status.code(), Some(2));
    assert_eq!(facetflow(&["run", "no-such-scenario-or-file", "--quiet"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cfl");
    let out = facetflow(&["run", "cfl-violation", "--quiet", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(&dir);
    assert_eq!(m["status"], "numerical_failure");
    assert_eq!(m["exit_code"], 3);
    assert!(m["error"].as_str().unwrap().len() > 0);
}

#[test]
fn failed_check_exits_four() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{}check.tolerance = 1e-12\n", scenario::template("resolvent-tent-1d").unwrap().text);
    let cfg = write_config(tmp.path(), "strict.cfg", &text);
    let dir = tmp.path().join("strict");
    let out = facetflow(&["run", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL facet_drop"));
    assert_eq!(manifest(&dir)["status"], "check_failed");
}
