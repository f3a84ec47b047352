use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kthier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kthier")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

#[test]
fn verify_point_passes_with_budget_six() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kthier(&["verify", "--model", "pt", "--max-n", "6", "--seed", "17", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("summary: all checks passed"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["config"]["common"]["seed"], 17);
    assert_eq!(report["format"], "kthier-report/1");
}

#[test]
fn third_point_flow_is_a_single_term() {
    let o = kthier(&["flows", "--model", "pt", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let terms: Vec<&str> = text.lines().filter(|l| l.starts_with("3 ")).collect();
    assert_eq!(terms.len(), 1, "{text}");
    assert!(terms[0].ends_with("(v^3/6)·∂v"), "{text}");
}

#[test]
fn invariants_contain_the_four_point_row() {
    let o = kthier(&["invariants", "--max-degree", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "⟨1,1,1,(L-1)⟩_{0,4} = 1"));
}

#[test]
fn minimal_oracle_reports_irreducible_correlators() {
    let o = kthier(&["invariants", "--max-degree", "4", "--mode", "minimal"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot reduce"));
}

#[test]
fn tau_artifacts_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = kthier(&["tau", "--model", "pt2", "--k-t", "1", "--d-t", "3", "--out-dir", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    for f in ["tau.csv", "w.csv", "report.json"] {
        let x = fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f} differs between runs");
    }
    let w = fs::read_to_string(a.path().join("w.csv")).unwrap();
    assert!(w.starts_with("format,component,monomial,coefficient\n"));
    assert!(w.lines().skip(1).all(|l| l.starts_with("kthier-table/1,")));
}

#[test]
fn simulation_writes_tagged_float_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kthier(&["simulate", "--model", "pt", "--m", "64", "--dt", "1e-3", "--t-end", "0.05", "--cadence", "10", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let hist = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert!(hist.lines().skip(1).all(|l| l.starts_with("kthier-float/1,")));
    assert_eq!(hist.lines().count(), 1 + 6);
    let snap = fs::read_to_string(dir.path().join("snapshot.csv")).unwrap();
    assert_eq!(snap.lines().count(), 1 + 64);
}

#[test]
fn failed_checks_give_exit_status_one() {
    let o = kthier(&["simulate", "--model", "pt", "--m", "64", "--dt", "1e-3", "--t-end", "0.02", "--drift-tol", "0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("check(s) failed"));
}

#[test]
fn trr_passes_on_the_point() {
    let o = kthier(&["trr", "--model", "pt", "--k", "1,2", "--k2", "0,1", "--k3", "1", "--d-t", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn model_files_are_verified_on_load() {
    let good = fixture("pt2_unit_basis.toml");
    let o = kthier(&["flows", "--model-file", good.to_str().unwrap(), "--max-n", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let bad = fixture("broken_unit.toml");
    let o = kthier(&["verify", "--model-file", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unit axiom"));
}

#[test]
fn nonpositive_caps_are_rejected() {
    let o = kthier(&["flows", "--d-v", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
