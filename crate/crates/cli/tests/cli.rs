//! End-to-end tests against the built binary: exit codes, file round-trips,
//! CSV output, and report determinism.

use std::fs;
use std::process::Command;

fn roadgame() -> Command {
    Command::new(env!("CARGO_BIN_EXE_roadgame"))
}

#[test]
fn malformed_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{ definitely not json").unwrap();
    let out = roadgame().args(["analyze"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("parse error"), "{stderr}");
}

#[test]
fn validation_failure_exits_2_with_named_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("invalid.json");
    fs::write(
        &path,
        r#"{
            "links": [{"tail": 0, "head": 1, "cost": {"b": 0, "a": 1, "k": 1, "orientation": "regular-heavy"}}],
            "od_pairs": [{"origin": 0, "destination": 1, "regular": -2.0, "smart": 1.0}]
        }"#,
    )
    .unwrap();
    let out = roadgame().args(["analyze"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("negative demand"), "{stderr}");
}

#[test]
fn fixture_then_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("example2.json");
    let out = roadgame()
        .args(["fixture", "example2", "--param", "2.0", "--output"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let json_path = dir.path().join("report.json");
    let out = roadgame()
        .args(["analyze"])
        .arg(&path)
        .args(["--json"])
        .arg(&json_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("price of anarchy: 2"), "{stdout}");
    assert!(stdout.contains("worst equilibrium cost: 4"), "{stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["price_of_anarchy"].as_f64().unwrap(), 2.0);
    assert_eq!(report["optimum"]["certificate"], "exhaustive-grid");
}

#[test]
fn unknown_fixture_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.json");
    let out = roadgame()
        .args(["fixture", "no-such-fixture", "--output"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_with_header_and_inf() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = roadgame()
        .args([
            "sweep", "example2", "--start", "3.5", "--end", "4.0", "--step", "0.5", "--output",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "param,poa_measured,poa_bound,bicriteria_measured,bicriteria_bound"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("4.000000000,"), "{}", lines[2]);
    assert!(lines[2].contains(",inf,"), "{}", lines[2]);
}

#[test]
fn sweep_rejects_bad_range() {
    let out = roadgame()
        .args(["sweep", "example2", "--start", "2.0", "--end", "1.0", "--step", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let instance = dir.path().join("mu.json");
    let out = roadgame()
        .args(["fixture", "mu-coupled", "--param", "0.25", "--output"])
        .arg(&instance)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let j1 = dir.path().join("r1.json");
    let j2 = dir.path().join("r2.json");
    for j in [&j1, &j2] {
        let out = roadgame()
            .args(["analyze"])
            .arg(&instance)
            .args(["--seed", "7", "--json"])
            .arg(j)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(&j1).unwrap();
    let b = fs::read(&j2).unwrap();
    assert_eq!(a, b, "reports differ between identical runs");
}

#[test]
fn verify_filter_runs_green_subset() {
    let out = roadgame()
        .args(["verify", "--filter", "example2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("checks passed"));
    assert!(!stdout.contains("[FAIL]"));
}

#[test]
fn invalid_split_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("badsplit.json");
    // A = Q + P holds but P = 0 has no positive definite symmetric part
    fs::write(
        &path,
        r#"{
            "links": [{"tail": 0, "head": 1}],
            "od_pairs": [{"origin": 0, "destination": 1, "regular": 1.0, "smart": 1.0}],
            "matrix_cost": {"A": [3.0, 1.0, 3.0, 1.0], "b": [0.0]},
            "split": {"Q": [3.0, 1.0, 3.0, 1.0], "P": [0.0, 0.0, 0.0, 0.0]}
        }"#,
    )
    .unwrap();
    let json_path = dir.path().join("report.json");
    let out = roadgame()
        .args(["analyze"])
        .arg(&path)
        .args(["--json"])
        .arg(&json_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let msg = report["split_error"].as_str().unwrap();
    assert!(msg.contains("not positive definite"), "{msg}");
}

#[test]
fn analyze_pigou_footnote_reports_nonmonotone() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pigou.json");
    roadgame()
        .args(["fixture", "pigou-footnote", "--output"])
        .arg(&path)
        .output()
        .unwrap();
    let out = roadgame().args(["analyze"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("monotone operator: false"), "{stdout}");
    assert!(stdout.contains("elementwise monotone: true"), "{stdout}");
}
