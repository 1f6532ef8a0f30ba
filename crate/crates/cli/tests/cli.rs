use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mwmsr"))
}

fn scenario(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "scenarios", name].iter().collect()
}

fn simulate(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("simulate")
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenario("fig6_two_hop.scenario"), dir.path(), &["--expect", "converged"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trace.csv", "trace.json", "summary.json", "scenario.echo"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["converged"], Value::Bool(true));
    assert_eq!(summary["safety_ok"], Value::Bool(true));
}

#[test]
fn trace_json_has_filters_for_every_normal_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenario("fig6_two_hop.scenario"), dir.path(), &["--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("trace.csv").exists());
    let trace = read_json(&dir.path().join("trace.json"));
    assert_eq!(trace["normal"], serde_json::json!([2, 3, 4]));
    let steps = trace["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 201);
    for step in &steps[..200] {
        let filters = step["filters"].as_object().unwrap();
        let keys: Vec<&str> = filters.keys().map(String::as_str).collect();
        assert_eq!(keys, ["2", "3", "4"]);
    }
}

#[test]
fn unmet_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&scenario("fig5_one_hop.scenario"), dir.path(), &["--expect", "converged"]);
    assert_eq!(out.status.code(), Some(1));
    let out = simulate(&scenario("fig5_one_hop.scenario"), dir.path(), &["--expect", "diverged"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.scenario");
    std::fs::write(&empty, "").unwrap();
    let out = simulate(&empty, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    let typo = dir.path().join("typo.scenario");
    std::fs::write(&typo, "[scenario]\ngenerator = cycle 4\nhops = 1\nf = 0\ninitial = 1 2 3 4\nhorzion = 5\n").unwrap();
    let out = simulate(&typo, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));

    let out = simulate(&dir.path().join("missing.scenario"), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn echo_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert_eq!(simulate(&scenario("fig8_async.scenario"), &first, &[]).status.code(), Some(0));
    assert_eq!(simulate(&first.join("scenario.echo"), &second, &[]).status.code(), Some(0));
    for f in ["trace.csv", "trace.json", "summary.json", "scenario.echo"] {
        let a = std::fs::read(first.join(f)).unwrap();
        let b = std::fs::read(second.join(f)).unwrap();
        assert!(a == b, "{f} differs after reload");
    }
}

fn write_graph(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("g.graph");
    std::fs::write(&p, text).unwrap();
    p
}

fn robustness(graph: &Path, hops: &str, expect: &str) -> Output {
    bin()
        .args(["check-robustness", "--r", "2", "--s", "2", "--f", "1", "--hops", hops, "--expect", expect, "--graph"])
        .arg(graph)
        .output()
        .unwrap()
}

#[test]
fn check_robustness_reports_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "undirected 4\n1 2\n2 3\n3 4\n4 1\n");
    let out = robustness(&g, "1", "not-robust");
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdict"], Value::Bool(false));
    assert!(report["witness"]["v1"].is_array());

    let out = robustness(&g, "2", "robust");
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["witness"], Value::Null);

    assert_eq!(robustness(&g, "2", "not-robust").status.code(), Some(1));
}

#[test]
fn paths_lists_one_based_ids() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "directed 3\n1 2\n2 3\n");
    let out = bin().args(["paths", "--node", "3", "--hops", "2", "--graph"]).arg(&g).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mut lines: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    lines.sort();
    assert_eq!(lines, ["1 2 3", "2 3"]);
    let out = bin().args(["paths", "--node", "4", "--hops", "1", "--graph"]).arg(&g).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_writes_cell_and_run_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, "[grid]\nside = 10\nf = 1\nradius = 2.0\nhops = 2\nruns = 3\nseed = 7\n").unwrap();
    let (cells, runs) = (dir.path().join("cells.csv"), dir.path().join("runs.csv"));
    let out = bin()
        .arg("grid")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&cells)
        .arg("--runs-out")
        .arg(&runs)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&cells).unwrap().lines().count(), 2);
    assert_eq!(std::fs::read_to_string(&runs).unwrap().lines().count(), 4);

    std::fs::write(&cfg, "[grid]\nruns = 0\n").unwrap();
    let out = bin().arg("grid").arg("--config").arg(&cfg).arg("--out").arg(&cells).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
