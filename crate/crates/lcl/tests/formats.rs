use std::path::PathBuf;

use lcl::model::{load_model, resolve_model, save_model, ModelFile};
use lcl::report::{RunReport, RunRow, SetJson};
use lcl::spec::{load_spec, SpecFile};
use lcl::Error;
use lcl_core::bench::{self, FamilyName, FamilySpec};
use lcl_core::{MpsFamily, SemilinearSet};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn same_tensors(a: &MpsFamily, b: &MpsFamily) -> bool {
    let (ma, mb) = (a.kraus().matrices(), b.kraus().matrices());
    ma.len() == mb.len()
        && ma
            .iter()
            .zip(mb)
            .all(|(x, y)| x.sub(y).map(|d| d.max_abs() == 0.0).unwrap_or(false))
}

#[test]
fn shipped_models_match_builtins() {
    let cases = [
        ("models/dichotomy.json", bench::dichotomy_tensors()),
        ("models/two_block.json", bench::two_block_family()),
        (
            "models/aklt_D4.json",
            bench::build_family(FamilySpec::new(FamilyName::Aklt, 2)).unwrap(),
        ),
        (
            "models/periodic_D2.json",
            bench::build_family(FamilySpec::new(FamilyName::Periodic, 1)).unwrap(),
        ),
    ];
    for (path, want) in cases {
        let got = load_model(&data(path)).unwrap();
        assert!(same_tensors(&got, &want), "{path}");
    }
}

#[test]
fn model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let f = bench::two_block_family();
    save_model(&f, &path).unwrap();
    let g = load_model(&path).unwrap();
    assert_eq!(g.name(), f.name());
    assert!(same_tensors(&f, &g));
    for n in 1..6 {
        assert_eq!(f.norm_sq(n).unwrap(), g.norm_sq(n).unwrap());
    }
}

#[test]
fn malformed_models_name_the_offending_index() {
    let mut m = ModelFile::from_family(&bench::two_block_family());
    m.matrices[1][2].pop();
    let err = m.to_family().unwrap_err().to_string();
    assert!(err.contains("matrix 1, row 2"), "{err}");
    assert!(err.contains("expected 4"), "{err}");

    let mut m = ModelFile::from_family(&bench::two_block_family());
    m.matrices[0][3][1] = [f64::NAN, 0.0];
    let err = m.to_family().unwrap_err().to_string();
    assert!(err.contains("matrix 0, entry (3, 1)"), "{err}");

    let mut m = ModelFile::from_family(&bench::two_block_family());
    m.d = 7;
    let err = m.to_family().unwrap_err().to_string();
    assert!(err.contains("declares d = 7"), "{err}");

    let mut m = ModelFile::from_family(&bench::two_block_family());
    m.matrices[2].pop();
    let err = m.to_family().unwrap_err().to_string();
    assert!(err.contains("matrix 2") && err.contains("has 3 rows"), "{err}");
}

#[test]
fn unreadable_and_invalid_files_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert!(matches!(load_model(&missing), Err(Error::Io { path, .. }) if path == missing));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"x\", \"d\": 1}").unwrap();
    let err = load_model(&bad).unwrap_err();
    assert!(matches!(&err, Error::Json { path, .. } if *path == bad));
    assert!(err.to_string().contains("bad.json"), "{err}");
}

#[test]
fn builtin_model_names() {
    assert_eq!(resolve_model("dichotomy").unwrap().bond_dim(), 4);
    assert_eq!(resolve_model("aklt:3").unwrap().bond_dim(), 8);
    assert_eq!(resolve_model("near-critical:1").unwrap().bond_dim(), 2);
    assert!(matches!(resolve_model("nonsense"), Err(Error::UnknownModel(_))));
    assert!(resolve_model("aklt:x").is_err());
    assert!(resolve_model("magnet:2").is_err());
}

#[test]
fn shipped_specs_parse() {
    let s = load_spec(&data("specs/suite.json")).unwrap();
    assert_eq!(s.labels().unwrap().len(), 7);
    assert_eq!(s.formula(None).unwrap().render(), "E G (lro & !clust)");
    for p in ["specs/nonzero.json", "specs/near_one.json"] {
        let s = load_spec(&data(p)).unwrap();
        s.formula(None).unwrap();
    }
}

#[test]
fn label_forms() {
    let s = SpecFile::parse(
        r#"{"labels": {
            "a": {"expr": "val(N)", "in": "(0.95, 1.05)"},
            "b": {"expr": "val(N)", "abs_lt": 0.5},
            "c": {"expr": "val(N)", "out": "[-1, 1]"},
            "d": {"expr": "val(N)", "abs_gt": 2}
        }, "formula": "G a"}"#,
    )
    .unwrap();
    let labels = s.labels().unwrap();
    let by = |n: &str| labels.iter().find(|l| l.name() == n).unwrap().clone();
    assert!(by("a").holds_value(1.0) && !by("a").holds_value(1.05));
    assert!(by("b").holds_value(-0.49) && !by("b").holds_value(0.5));
    assert!(by("c").holds_value(1.01) && !by("c").holds_value(1.0));
    assert!(by("d").holds_value(-2.01) && !by("d").holds_value(2.0));
    assert_eq!(s.formula_text(Some("X a")).unwrap(), "X a");
    assert_eq!(s.formula_text(None).unwrap(), "G a");
}

#[test]
fn label_errors() {
    let two = SpecFile::parse(r#"{"labels": {"a": {"expr": "val(N)", "in": "(0, 1)", "abs_lt": 1}}}"#).unwrap();
    let err = two.labels().unwrap_err().to_string();
    assert!(err.contains("label `a`") && err.contains("exactly one"), "{err}");
    let none = SpecFile::parse(r#"{"labels": {"a": {"expr": "val(N)"}}}"#).unwrap();
    assert!(none.labels().is_err());
    assert!(none.formula(None).is_err());
    assert!(SpecFile::parse(r#"{"labels": {"a": {"expr": "val(N)", "within": "(0, 1)"}}}"#).is_err());
    let bad = SpecFile::parse(r#"{"labels": {"a": {"expr": "val(N", "in": "(0, 1)"}}}"#).unwrap();
    assert!(bad.labels().unwrap_err().to_string().contains("label `a`"));
    let unknown = SpecFile::parse(r#"{"labels": {"a": {"expr": "val(N)", "in": "(0, 1)"}}, "formula": "G b"}"#).unwrap();
    assert!(unknown.formula(None).is_err());
}

#[test]
fn set_json_round_trip() {
    let sets = [
        SemilinearSet::empty(),
        SemilinearSet::universe(),
        SemilinearSet::finite([1, 3, 7]),
        SemilinearSet::progression(5, 2).unwrap(),
        SemilinearSet::from_parts([2, 4], 6, 9, [1, 3, 4]),
    ];
    for s in sets {
        let j = SetJson::from(&s);
        let text = serde_json::to_string(&j).unwrap();
        let back: SetJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_set(), s, "{text}");
        assert_eq!(back.text, s.to_string());
    }
}

fn sample_report() -> RunReport {
    let row = |model: &str, formula: &str, d, verdict: &str, runtime_s, mem| RunRow {
        model: model.into(),
        formula: formula.into(),
        bond_dim: d,
        verdict: verdict.into(),
        runtime_s,
        peak_memory_mb: mem,
        error: None,
    };
    RunReport::new(
        7,
        3600.0,
        vec![
            row("aklt", "phi1", 16, "T", 0.06554, Some(1.955)),
            row("aklt", "phi2", 16, "F", 0.5, None),
            row("cluster", "phi1", 16, "TO", 3600.0, Some(0.166)),
        ],
    )
}

#[test]
fn csv_report_layout() {
    let want = "model,D,phi1,phi2\n\
                aklt,16,T / 0.0655 / 1.955,F / 0.5000 / -\n\
                cluster,16,TO / 3600.0000 / 0.166,\n";
    assert_eq!(sample_report().to_csv(), want);
}

#[test]
fn json_report_layout() {
    let r = sample_report();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["timeout_s"], 3600.0);
    let row = &v["rows"][1];
    assert_eq!(row["D"], 16);
    assert_eq!(row["verdict"], "F");
    assert!(row["peak_memory_mb"].is_null());
    assert!(row.get("error").is_none());
    let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}
