//! End-to-end tests of the perfolab binary.

use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perfolab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sample_emits_graph_with_parts_and_is_deterministic() {
    let a = stdout(&run(&["sample", "--n", "12", "--seed", "5", "--stream", "2"]));
    let b = stdout(&run(&["sample", "--n", "12", "--seed", "5", "--stream", "2"]));
    assert_eq!(a, b, "same seed and stream must reproduce the sample");
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["n"], 12);
    let parts = v["parts"].as_array().unwrap();
    let covered: usize = parts.iter().map(|p| p.as_array().unwrap().len()).sum();
    assert_eq!(covered, 12);
    assert!(v.get("orientation").is_none());
    // Edge pairs sorted with u < v.
    let edges = v["edges"].as_array().unwrap();
    for e in edges {
        let (u, w) = (e[0].as_u64().unwrap(), e[1].as_u64().unwrap());
        assert!(u < w);
    }
}

#[test]
fn perfect_sample_reports_orientation() {
    let out = stdout(&run(&["sample", "--n", "9", "--seed", "1", "--perfect"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let orientation = v["orientation"].as_str().unwrap();
    assert!(orientation == "unipolar" || orientation == "co-unipolar");
}

#[test]
fn eval_reads_graph_and_sentence_files() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("k3.json");
    fs::write(&graph, r#"{"n":3,"edges":[[0,1],[0,2],[1,2]]}"#).unwrap();
    let phi = dir.path().join("triangle.fo");
    fs::write(&phi, "exists x y z : x ~ y & x ~ z & y ~ z\n").unwrap();
    let out = stdout(&run(&[
        "eval",
        graph.to_str().unwrap(),
        "--phi",
        phi.to_str().unwrap(),
    ]));
    assert_eq!(out.trim(), "true");

    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{"n":3,"edges":[]}"#).unwrap();
    let out = stdout(&run(&[
        "eval",
        empty.to_str().unwrap(),
        "--phi",
        phi.to_str().unwrap(),
    ]));
    assert_eq!(out.trim(), "false");
}

#[test]
fn formulas_print_parseable_canonical_text() {
    for kind in ["inc0", "cn", "hedge", "bigger", "unip"] {
        let out = stdout(&run(&["formulas", kind, "--interpreted"]));
        let f = perfolab::logic::parse(out.trim()).expect(kind);
        assert_eq!(f.to_string(), out.trim(), "formulas {kind} is canonical");
    }
}

#[test]
fn formulas_relativize_needs_phi() {
    let out = run(&["formulas", "relativize"]);
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.fo");
    fs::write(&phi, "exists a : forall b : a ~ b").unwrap();
    let out = stdout(&run(&[
        "formulas",
        "relativize",
        "--interpreted",
        "--phi",
        phi.to_str().unwrap(),
    ]));
    assert!(out.contains("Hedge(a, b, y)"));
}

#[test]
fn spectrum_subcommand_matches_library() {
    let out = stdout(&run(&["spectrum", "exists x y z : x ~ y & x ~ z & y ~ z", "3"]));
    assert_eq!(out.trim(), "true");
    let out = stdout(&run(&["spectrum", "exists x y z : x ~ y & x ~ z & y ~ z", "2"]));
    assert_eq!(out.trim(), "false");
    let out = run(&["spectrum", "exists x : x = x", "7"]);
    assert!(!out.status.success(), "default cap must reject n = 7");
}

#[test]
fn experiment_emits_report_and_report_flattens_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let phi = dir.path().join("phi.fo");
    fs::write(&phi, "exists a : a = a").unwrap();
    stdout(&run(&[
        "experiment",
        "dichotomy",
        "--n",
        "64",
        "--trials",
        "4",
        "--seed",
        "3",
        "--phi",
        phi.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["experiment"], "dichotomy");
    assert_eq!(v["config"]["n"], 64);
    assert!(v["metrics"]["frequency"].is_number());
    assert_eq!(v["trials"].as_array().unwrap().len(), 4);

    let out = stdout(&run(&["report", report.to_str().unwrap()]));
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("holds") && header.contains("trial"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn pmf_dumps_csv() {
    let out = stdout(&run(&["pmf", "--n", "2"]));
    assert_eq!(out.trim(), "m,probability\n1,0.8\n2,0.2".to_string());
}

#[test]
fn sample_size_guard_and_env_override() {
    let out = run(&["sample", "--n", "100001", "--seed", "0"]);
    assert!(!out.status.success(), "default guard must reject n > 100000");
    let out = bin()
        .args(["sample", "--n", "50", "--seed", "0"])
        .env("PERFOLAB_MAX_N", "10")
        .output()
        .unwrap();
    assert!(!out.status.success(), "lowered guard must reject n = 50");
    let out = bin()
        .args(["sample", "--n", "50", "--seed", "0"])
        .env("PERFOLAB_MAX_N", "60")
        .output()
        .unwrap();
    assert!(out.status.success());
}
