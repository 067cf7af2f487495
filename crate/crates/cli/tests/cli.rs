//! End-to-end tests of the `gridprice` binary: exit codes, file formats,
//! determinism, and error reporting on malformed input.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridprice"))
        .current_dir(dir)
        .env_remove("GRIDPRICE_SEED")
        .args(args)
        .output()
        .expect("failed to spawn gridprice")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        stderr(out)
    );
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).expect("output is not valid JSON")
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--out", "a.json"]));
    assert_success(&run_in(dir.path(), &["generate", "--out", "b.json"]));
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b, "same invocation must produce byte-identical files");

    let doc = json(std::str::from_utf8(&a).unwrap());
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["seed"], 19);
    assert_eq!(doc["n_users"], 20);
    assert_eq!(doc["consumers"].as_array().unwrap().len(), 20);
}

#[test]
fn generate_stdout_equals_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let piped = run_in(dir.path(), &["generate", "--users", "4"]);
    assert_success(&piped);
    assert_success(&run_in(dir.path(), &["generate", "--users", "4", "--out", "f.json"]));
    let file = fs::read_to_string(dir.path().join("f.json")).unwrap();
    assert_eq!(stdout(&piped), file);
}

#[test]
fn env_seed_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gridprice"))
        .current_dir(dir.path())
        .env("GRIDPRICE_SEED", "7")
        .args(["generate", "--seed", "19"])
        .output()
        .unwrap();
    assert_success(&out);
    let doc = json(&stdout(&out));
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["label"], "reference-7-20");
}

#[test]
fn malformed_env_seed_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gridprice"))
        .current_dir(dir.path())
        .env("GRIDPRICE_SEED", "not-a-number")
        .args(["generate"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("GRIDPRICE_SEED"));
}

#[test]
fn solve_writes_outcome_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--out", "ref.json"]));
    let out = run_in(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "ref.json",
            "--period",
            "3",
            "--formulation",
            "f1",
            "--weights",
            "1,1,1",
            "--eta",
            "0.5",
            "--out",
            "outcome.json",
        ],
    );
    assert_success(&out);
    let summary = stdout(&out);
    assert!(summary.contains("objective"), "summary missing totals: {summary}");
    assert!(summary.contains("formulation f1"));

    let doc = json(&fs::read_to_string(dir.path().join("outcome.json")).unwrap());
    let prices = doc["prices"].as_array().unwrap();
    assert_eq!(prices.len(), 20);
    // The objective decomposition holds exactly as stored.
    let (rev, cost, welfare, obj) = (
        doc["revenue"].as_f64().unwrap(),
        doc["cost_term"].as_f64().unwrap(),
        doc["welfare_penalty"].as_f64().unwrap(),
        doc["objective"].as_f64().unwrap(),
    );
    assert!((rev - cost - welfare - obj).abs() <= 1e-9 * (1.0 + obj.abs()));
    assert_eq!(doc["context"]["eta"], 0.5);
}

#[test]
fn solve_without_out_prints_pure_json() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--users", "3", "--out", "s.json"]));
    let out = run_in(
        dir.path(),
        &["solve", "--scenario", "s.json", "--period", "0", "--formulation", "f2"],
    );
    assert_success(&out);
    let doc = json(&stdout(&out));
    assert_eq!(doc["formulation"], "f2");
    assert!(doc["context"]["eta"].is_null(), "default eta is unbounded -> null");
}

#[test]
fn oracle_matches_f1_on_tiny_scenario() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(
        dir.path(),
        &["generate", "--users", "3", "--price-cap", "4", "--out", "tiny.json"],
    ));
    let oracle = run_in(
        dir.path(),
        &["oracle", "--scenario", "tiny.json", "--period", "1", "--grid", "0.01"],
    );
    assert_success(&oracle);
    let qp = run_in(
        dir.path(),
        &["solve", "--scenario", "tiny.json", "--period", "1", "--formulation", "f1"],
    );
    assert_success(&qp);
    let o = json(&stdout(&oracle))["objective"].as_f64().unwrap();
    let q = json(&stdout(&qp))["objective"].as_f64().unwrap();
    // Grid-resolution bound: 5 * step * N * P.
    assert!((o - q).abs() <= 5.0 * 0.01 * 3.0 * 4.0, "oracle {o} vs qp {q}");
}

#[test]
fn oracle_rejects_large_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--out", "ref.json"]));
    let out = run_in(dir.path(), &["oracle", "--scenario", "ref.json", "--period", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("ORACLE_TOO_MANY_USERS"), "stderr: {}", stderr(&out));
}

#[test]
fn eta_star_is_period_independent_without_solar() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--out", "ref.json"]));
    let out = run_in(dir.path(), &["eta-star", "--scenario", "ref.json", "--weights", "1,1,1"]);
    assert_success(&out);
    let text = stdout(&out);
    let mut values = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3, "bad row: {line}");
        values.push(fields[1].parse::<f64>().unwrap());
        // No solar: the net-metering value reduces to the normal one.
        assert_eq!(fields[1], fields[2], "line: {line}");
    }
    assert_eq!(values.len(), 6);
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread <= 1e-12, "normal spread should not depend on the period: {values:?}");
}

#[test]
fn validate_accepts_fresh_outcome_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--out", "ref.json"]));
    assert_success(&run_in(
        dir.path(),
        &[
            "solve", "--scenario", "ref.json", "--period", "2", "--formulation", "f1",
            "--eta", "0.3", "--out", "o.json",
        ],
    ));
    let ok = run_in(dir.path(), &["validate", "--scenario", "ref.json", "--outcome", "o.json"]);
    assert_success(&ok);
    assert!(stdout(&ok).contains("ok"));
    assert!(stdout(&ok).contains("kkt"));

    // Perturb one stored price beyond tolerance.
    let mut doc = json(&fs::read_to_string(dir.path().join("o.json")).unwrap());
    let p0 = doc["prices"][0].as_f64().unwrap();
    doc["prices"][0] = serde_json::json!(p0 + 0.01);
    fs::write(dir.path().join("bad.json"), serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let bad = run_in(dir.path(), &["validate", "--scenario", "ref.json", "--outcome", "bad.json"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("VALIDATE_MISMATCH"), "stderr: {}", stderr(&bad));
}

#[test]
fn missing_field_is_schema_error_with_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("broken.json"),
        r#"{
            "version": 1, "label": "x", "seed": 1, "n_users": 1, "n_periods": 1,
            "p_b": 0.0, "P_cap": 10.0,
            "consumers": [ { "omega": [5.0], "m": [0.0], "s": [0.0] } ]
        }"#,
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--scenario", "broken.json", "--period", "0", "--formulation", "f1"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("SCHEMA"), "stderr: {err}");
    assert!(err.contains("consumers[0].alpha"), "stderr: {err}");
}

#[test]
fn unknown_field_is_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("extra.json"),
        r#"{
            "version": 1, "label": "x", "seed": 1, "n_users": 1, "n_periods": 1,
            "p_b": 0.0, "P_cap": 10.0, "surprise": true,
            "consumers": [ { "alpha": 2.0, "omega": [5.0], "m": [0.0], "s": [0.0] } ]
        }"#,
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--scenario", "extra.json", "--period", "0", "--formulation", "f1"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("SCHEMA") && err.contains("surprise"), "stderr: {err}");
}

#[test]
fn truncated_json_is_schema_error_not_panic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("trunc.json"), "{\"version\": 1, \"label\": \"x\"").unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--scenario", "trunc.json", "--period", "0", "--formulation", "f1"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("SCHEMA"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--scenario", "nope.json", "--period", "0", "--formulation", "f1"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error[IO]"), "stderr: {}", stderr(&out));
}

#[test]
fn handwritten_one_user_scenario_solves() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("one.json"),
        r#"{
            "version": 1, "label": "one", "seed": 0, "n_users": 1, "n_periods": 1,
            "p_b": 0.0, "P_cap": 10.0,
            "consumers": [ { "alpha": 2.0, "omega": [5.0], "m": [0.1], "s": [0.0] } ]
        }"#,
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["solve", "--scenario", "one.json", "--period", "0", "--formulation", "f1", "--weights", "1,0,1"],
    );
    assert_success(&out);
    let doc = json(&stdout(&out));
    // Single user, e2 = 0, p_b = 0: closed form gives p = e1*omega*alpha /
    // (2*(e1*alpha + e3)) = 5*2/(2*3) = 5/3.
    let p = doc["prices"][0].as_f64().unwrap();
    assert!((p - 5.0 / 3.0).abs() <= 1e-6, "price {p}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--scenario", "x.json", "--period", "0", "--formulation", "f9"],
        vec!["solve", "--scenario", "x.json", "--period", "0", "--formulation", "f1", "--weights", "1,x,3"],
        vec!["solve", "--scenario", "x.json", "--period", "0", "--formulation", "f1", "--eta", "-1"],
        vec!["sweep-eta", "--scenario", "x.json", "--grid", "2,1"],
        vec!["frobnicate"],
        vec!["generate", "--users", "0"],
    ] {
        let out = run_in(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}\nstderr: {}", stderr(&out));
    }
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("sweep-eta"));
}

#[test]
fn sweep_eta_writes_csv_and_redistribution() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--users", "6", "--out", "s.json"]));
    let out = run_in(
        dir.path(),
        &[
            "sweep-eta", "--scenario", "s.json", "--grid", "0:0.4:0.2",
            "--out", "sweep.csv", "--redistribution", "redis.csv",
        ],
    );
    assert_success(&out);
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = sweep.lines();
    assert_eq!(
        lines.next().unwrap(),
        "eta,avg_price,revenue,total_elastic_load,avg_consumer_utility,demand_stddev,sellback_total,objective"
    );
    assert_eq!(lines.count(), 3, "one row per grid point");
    let redis = fs::read_to_string(dir.path().join("redis.csv")).unwrap();
    assert!(redis.starts_with("user_id,omega,"));
    assert_eq!(redis.lines().count(), 7, "header + one row per user");
}

#[test]
fn sweep_eta_rejects_unsupported_formulations() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--users", "3", "--out", "s.json"]));
    let out = run_in(dir.path(), &["sweep-eta", "--scenario", "s.json", "--formulation", "f4r2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("UNSUPPORTED"), "stderr: {}", stderr(&out));
}

#[test]
fn sweep_e1_writes_one_file_per_formulation() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(dir.path(), &["generate", "--users", "4", "--out", "s.json"]));
    let out = run_in(
        dir.path(),
        &["sweep-e1", "--scenario", "s.json", "--grid", "1,2", "--out", "fig.csv"],
    );
    assert_success(&out);
    for tag in ["f1", "f2", "f3"] {
        let path = dir.path().join(format!("fig-{tag}.csv"));
        let text = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {path:?}"));
        assert!(text.starts_with("e1,"), "bad header in {path:?}");
        assert_eq!(text.lines().count(), 3);
    }
}

#[test]
fn compare_nm_emits_one_row_per_period() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run_in(
        dir.path(),
        &["generate", "--users", "4", "--base-price", "2", "--solar", "1", "--out", "nm.json"],
    ));
    let out = run_in(dir.path(), &["compare-nm", "--scenario", "nm.json", "--weights", "1,0.05,1"]);
    assert_success(&out);
    let text = stdout(&out);
    assert!(text.starts_with("period,normal_price,nm_price,"));
    assert_eq!(text.lines().count(), 7);
}
