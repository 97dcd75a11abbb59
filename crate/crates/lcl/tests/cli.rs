use std::path::PathBuf;
use std::process::{Command, Output};

fn data(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn lcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn false_verdict_exits_one_with_witness() {
    let o = lcl(&["check", "--model", &data("models/dichotomy.json"), "--spec", &data("specs/nonzero.json"), "--json"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let v = json(&o);
    assert_eq!(v["verdict"], "F");
    assert_eq!(v["witness"], 1);
    assert_eq!(v["formula"], "G nz");
}

#[test]
fn true_verdict_exits_zero() {
    let o = lcl(&["check", "--model", "two_block", "--spec", &data("specs/nonzero.json"), "--formula", "X G nz"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict: T"), "{}", stdout(&o));
}

#[test]
fn unknown_verdict_exits_two() {
    let o = lcl(&["check", "--model", "aklt:2", "--spec", &data("specs/suite.json"), "--formula", "G nz"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn check_report_lists_label_sets() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = lcl(&[
        "check",
        "--model",
        "two_block",
        "--spec",
        &data("specs/near_one.json"),
        "--formula",
        "l",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let l = &v["per_label"]["l"];
    assert_eq!(l["kappa"], 2);
    assert_eq!(l["omega_plus"]["residues"], serde_json::json!([1]));
    assert_eq!(l["omega_minus"]["residues"], serde_json::json!([5]));
    assert_eq!(l["omega_minus"]["modulus"], 2);
}

#[test]
fn errors_exit_three() {
    let o = lcl(&["check", "--model", "nonsense", "--spec", &data("specs/nonzero.json")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let o = lcl(&["check", "--model", "two_block", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(o.status.code(), Some(3));
    let o = lcl(&["check", "--model", "two_block", "--spec", &data("specs/nonzero.json"), "--formula", "G ("]);
    assert_eq!(o.status.code(), Some(3));
    let o = lcl(&["check", "--model", "two_block"]);
    assert_eq!(o.status.code(), Some(3));
    let o = lcl(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_exits_zero() {
    let o = lcl(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["check", "spectrum", "bench", "oracle"] {
        assert!(stdout(&o).contains(sub));
    }
}

#[test]
fn timeout_reports_to() {
    let o = lcl(&[
        "check",
        "--model",
        "near_critical:5",
        "--spec",
        &data("specs/suite.json"),
        "--timeout",
        "0.01",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    assert_eq!(json(&o)["verdict"], "TO");
}

#[test]
fn spectrum_lists_components() {
    let o = lcl(&["spectrum", "--model", "two_block", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let comps = v["components"].as_array().unwrap();
    assert_eq!(comps.len(), 2);
    let mut periods: Vec<u64> = comps.iter().map(|c| c["period"].as_u64().unwrap()).collect();
    periods.sort();
    assert_eq!(periods, [1, 2]);
}

#[test]
fn bench_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("bench.json");
    let o = lcl(&[
        "bench",
        "--family",
        "cluster",
        "--t",
        "1,2",
        "--formula",
        "phi6",
        "--jobs",
        "2",
        "--seed",
        "5",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["seed"], 5);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["D"], 2);
    assert_eq!(rows[1]["D"], 4);
    assert!(rows.iter().all(|r| r["verdict"] == "F"));
    let csv = std::fs::read_to_string(report.with_extension("csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "model,D,phi6");
    assert!(lines[1].starts_with("cluster,2,F / "), "{csv}");
    assert!(lines[2].starts_with("cluster,4,F / "), "{csv}");
}

#[test]
fn oracle_prints_bounded_values() {
    let o = lcl(&[
        "oracle",
        "--model",
        "two_block",
        "--spec",
        &data("specs/near_one.json"),
        "--formula",
        "l",
        "--horizon",
        "12",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let cells: Vec<&str> = v["values"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert_eq!(cells, ["F", "F", "F", "F", "T", "F", "T", "F", "T", "F", "T", "F"]);
    let o = lcl(&["oracle", "--model", "two_block", "--spec", &data("specs/near_one.json"), "--formula", "l", "--horizon", "3"]);
    let text = stdout(&o);
    assert!(text.starts_with("formula: l\n"), "{text}");
}
