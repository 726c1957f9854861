//! End-to-end tests of the `crn` binary: the exit-code contract and report
//! round trips.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn crn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crn"))
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, content).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const R0: &str = "X1 + 2 X2 -> 3 X2 @ 1\nX2 -> X1 @ k\n";
const BRUSSELATOR: &str = "0 -> X @ k1\nX -> 0 @ k2\nX -> Y @ k3\n2 X + Y -> 3 X @ k4\n";
const RC0: &str =
    "species X, Y, Z\nZ + X -> 2 X @ k1\nX + Y -> 2 Y @ k2\nY + Z -> 0 @ k3\n0 -> 2 Z @ k4\n";

#[test]
fn parse_prints_structure_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "r0.crn", R0);
    let out = run(crn().arg("parse").arg(&p));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("rank: 1"));
    assert!(text.contains("[1.0, 1.0]"), "conservation row printed");
}

#[test]
fn parse_missing_file_exits_2() {
    let out = run(crn().arg("parse").arg("/no/such/file.crn"));
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn parse_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "r0.crn", R0);
    let out = run(crn().arg("parse").arg(&p).arg("--format").arg("json"));
    assert!(out.status.success());
    let dump: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(dump["rank"], 1);
    assert_eq!(dump["gamma"][0][0], -1);
}

#[test]
fn parse_syntax_error_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "bad.crn", "X -> Y @ 1\nY -> @ 2\n");
    let out = run(crn().arg("parse").arg(&p));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2:"));
}

#[test]
fn analyze_r0_fold() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "r0.crn", R0);
    let out = run(crn()
        .args(["analyze"])
        .arg(&p)
        .args(["--kind", "fold", "--free", "k"]));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bp: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((bp["kappa"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(bp["theta"][0].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(bp["pass"]["transversal"], true);
}

#[test]
fn analyze_brusselator_hopf_l1_negative() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "b.crn", BRUSSELATOR);
    let out = run(crn()
        .args(["analyze"])
        .arg(&p)
        .args(["--kind", "hopf", "--free", "k3"]));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bp: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((bp["kappa"][2].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!(bp["l1"].as_f64().unwrap() < 0.0);
}

#[test]
fn analyze_rc0_hopf_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "rc0.crn", RC0);
    let out = run(crn()
        .args(["analyze"])
        .arg(&p)
        .args(["--kind", "hopf", "--free", "k1"]));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bp: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((bp["kappa"][0].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!(bp["l1"].as_f64().unwrap().abs() <= 1e-8);
}

#[test]
fn analyze_no_bracket_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // pure decay: no fold anywhere
    let p = write_tmp(&dir, "d.crn", "X -> 0 @ k\n0 -> X @ 1\n");
    let out = run(crn()
        .args(["analyze"])
        .arg(&p)
        .args(["--kind", "fold", "--free", "k", "--range", "0.5:2"]));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn enlarge_prints_schedule_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "r0.crn", R0);
    let out = run(crn()
        .arg("enlarge")
        .arg(&p)
        .args(["--enlarge", "E6: split r2 with Y1 + Y2"]));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("X2 -> Y1 + Y2 @ k"));
    assert!(text.contains("Y1 + Y2 -> X1 @ eps^-1"));
}

#[test]
fn inherit_e1_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "r0.crn", R0);
    let json = dir.path().join("rep.json");
    let csv = dir.path().join("rep.csv");
    let out = run(crn()
        .arg("inherit")
        .arg(&p)
        .args(["--kind", "fold", "--free", "k"])
        .args(["--enlarge", "E1: X1 + X2 -> 2 X2"])
        .arg("--output")
        .arg(&json)
        .arg("--csv")
        .arg(&csv));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rep["verdict"], "Pass");
    let csv_text = fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("eps,kappa_dev,theta_dev,min_extra_re"));
    assert_eq!(csv_text.lines().count(), 13);
}

#[test]
fn inherit_supports_enlarge_statements_in_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(
        &dir,
        "r0e6.crn",
        &format!("{R0}enlarge E6: split r2 with Y1 + Y2\n"),
    );
    let out = run(crn()
        .arg("inherit")
        .arg(&p)
        .args(["--kind", "fold", "--free", "k"]));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["verdict"], "Pass");
    // every transverse eigenvalue real part is negative
    for rec in rep["records"].as_array().unwrap() {
        for eig in rec["extra_eigs"].as_array().unwrap() {
            assert!(eig[0].as_f64().unwrap() < 0.0);
        }
    }
}

#[test]
fn inherit_invalid_enlargement_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_tmp(&dir, "r0.crn", R0);
    let out = run(crn()
        .arg("inherit")
        .arg(&p)
        .args(["--kind", "fold", "--free", "k"])
        .args(["--enlarge", "E1: 0 -> X1"]));
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr)
        .contains("reaction vector not in stoichiometric subspace"));
}

#[test]
fn gallery_single_case_and_full_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("gal");
    let out = run(crn()
        .arg("gallery")
        .arg("--out")
        .arg(&out_dir)
        .args(["--only", "r0-e2", "--csv"]));
    assert!(out.status.success());
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("r0-e2.json")).unwrap()).unwrap();
    assert_eq!(rep["verdict"], "Pass");
    assert!(out_dir.join("r0-e2.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], 1);
    assert_eq!(summary["failed"], 0);
}

#[test]
fn gallery_unknown_filter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(crn()
        .arg("gallery")
        .arg("--out")
        .arg(dir.path().join("g"))
        .args(["--only", "nope"]));
    assert_eq!(out.status.code(), Some(2));
}
