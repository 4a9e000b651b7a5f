//! End-to-end tests of the `urngraph` binary: command output, file
//! emission, exit codes, determinism, and JSON schema conformance.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn urngraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urngraph"))
        .args(args)
        .env_remove("URNGRAPH_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn assert_valid(schema_name: &str, instance: &serde_json::Value) {
    let validator = jsonschema::validator_for(&schema(schema_name)).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn classify_text_output() {
    let expectations = [
        ("triangle.txt", "not-bipartite"),
        ("k32.txt", "unbalanced-bipartite A={1,2,3} B={4,5}"),
        ("k2.txt", "balanced-bipartite A={1} B={2}"),
        ("c4.txt", "balanced-bipartite A={1,3} B={2,4}"),
    ];
    for (file, expected) in expectations {
        let out = urngraph(&[
            "--cmd",
            "classify",
            "--format",
            "csv",
            "--graph",
            fixture(file).to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let text = stdout(&out);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(expected), "for {file}");
        assert!(lines.next().unwrap().starts_with("m="));
    }
}

#[test]
fn classify_json_matches_schema() {
    let out = urngraph(&[
        "--cmd",
        "classify",
        "--graph",
        fixture("k32.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_valid("classify.schema.json", &body);
    assert_eq!(body["bipartite"]["a"], serde_json::json!([1, 2, 3]));
}

#[test]
fn classify_parse_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 2\n2 2\n").unwrap();
    let out = urngraph(&["--cmd", "classify", "--graph", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "stderr should name the line: {err}");
}

#[test]
fn missing_graph_flag_exits_2() {
    let out = urngraph(&["--cmd", "equilibria"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_error_exits_2() {
    let out = urngraph(&["--cmd", "frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equilibria_report_matches_schema_and_values() {
    let out = urngraph(&[
        "--cmd",
        "equilibria",
        "--graph",
        fixture("triangle.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_valid("equilibria.schema.json", &body);
    assert_eq!(body["equilibria"].as_array().unwrap().len(), 4);
    assert_eq!(body["limit_set"]["kind"], "singleton");
    let base = body["limit_set"]["base"].as_array().unwrap();
    for x in base {
        assert!((x.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-8);
    }
}

#[test]
fn equilibria_interval_case() {
    let out = urngraph(&[
        "--cmd",
        "equilibria",
        "--graph",
        fixture("c4.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_valid("equilibria.schema.json", &body);
    assert_eq!(body["limit_set"]["kind"], "interval");
    let endpoints = body["limit_set"]["endpoints"].as_array().unwrap();
    assert_eq!(endpoints.len(), 2);
}

#[test]
fn equilibria_csv_lists_rows() {
    let out = urngraph(&[
        "--cmd",
        "equilibria",
        "--format",
        "csv",
        "--graph",
        fixture("triangle.txt").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "stability,marginal,support,x1,x2,x3");
    assert_eq!(lines.len(), 5);
}

#[test]
fn simulate_writes_deterministic_artifacts() {
    let run = |dir: &Path| {
        let out = urngraph(&[
            "--cmd",
            "simulate",
            "--graph",
            fixture("k2.txt").to_str().unwrap(),
            "--trials",
            "5",
            "--steps",
            "300",
            "--seed",
            "9",
            "--sample-stride",
            "50",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run(dir_a.path());
    run(dir_b.path());

    for k in 0..5 {
        assert!(dir_a.path().join(format!("trial_{k:04}.csv")).exists());
    }
    let summary_a = std::fs::read(dir_a.path().join("summary.json")).unwrap();
    let summary_b = std::fs::read(dir_b.path().join("summary.json")).unwrap();
    assert_eq!(summary_a, summary_b, "identical config must give identical bytes");
    let trial_a = std::fs::read(dir_a.path().join("trial_0003.csv")).unwrap();
    let trial_b = std::fs::read(dir_b.path().join("trial_0003.csv")).unwrap();
    assert_eq!(trial_a, trial_b);

    let body: serde_json::Value = serde_json::from_slice(&summary_a).unwrap();
    assert_valid("summary.schema.json", &body);
    assert_eq!(body["trials"], 5);
    assert_eq!(body["per_trial"].as_array().unwrap().len(), 5);

    let csv = String::from_utf8(trial_a).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("n,tau,x1,x2"));
    assert_eq!(csv.lines().count(), 1 + 7); // header + n = 0,50,...,300
}

#[test]
fn simulate_csv_format_adds_summary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = urngraph(&[
        "--cmd",
        "simulate",
        "--graph",
        fixture("triangle.txt").to_str().unwrap(),
        "--trials",
        "3",
        "--steps",
        "200",
        "--format",
        "csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv
        .lines()
        .next()
        .unwrap()
        .starts_with("trial,seed,x1,x2,x3,dist_inf,dist_euclid,eta,nearest_unstable"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn out_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_urngraph"))
        .args([
            "--cmd",
            "simulate",
            "--graph",
            fixture("k2.txt").to_str().unwrap(),
            "--trials",
            "2",
            "--steps",
            "100",
        ])
        .env("URNGRAPH_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn verify_reduced_budget_passes() {
    let out = urngraph(&["--cmd", "verify", "--steps", "10000"]);
    let text = stdout(&out);
    assert_eq!(
        out.status.code(),
        Some(0),
        "reduced verify should pass:\n{text}"
    );
    // per-check lines followed by a JSON report
    assert!(text.contains("criterion 01 PASS"));
    let json_start = text.find("{\n").expect("JSON report present");
    let body: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_valid("verify.schema.json", &body);
    assert_eq!(body["budget"], "reduced");
    assert_eq!(body["passed"], true);
    assert_eq!(body["checks"].as_array().unwrap().len(), 11);
}

#[test]
fn verify_reports_corrupted_extra_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("corrupt.txt");
    std::fs::write(&bad, "1 2\n1 2\n").unwrap();
    let out = urngraph(&[
        "--cmd",
        "verify",
        "--steps",
        "10000",
        "--graph",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("criterion 00 FAIL"), "{text}");
    assert!(text.contains("duplicate edge"), "{text}");
}
