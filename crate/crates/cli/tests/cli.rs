use std::path::PathBuf;
use std::process::{Command, Output};

fn laxforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laxforge"))
        .args(args)
        .env_remove("LAXFORGE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn verify_lax_n1_passes() {
    let o = laxforge(&["verify-lax", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("OK:"));
}

#[test]
fn verify_lax_json_matches_golden() {
    let a = laxforge(&["verify-lax", "--n", "2", "--seed", "7", "--format", "json"]);
    let b = laxforge(&["verify-lax", "--n", "2", "--seed", "7", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a), golden("verify_lax_n2_seed7.json"));
}

#[test]
fn ops_check_latex_matches_golden() {
    let o = laxforge(&["ops-check", "--format", "latex"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("\\documentclass"));
    assert!(text.trim_end().ends_with("\\end{document}"));
    assert_eq!(text, golden("ops_check.tex"));
}

#[test]
fn order_out_of_range_is_usage_error() {
    assert_eq!(laxforge(&["verify-lax", "--n", "0"]).status.code(), Some(2));
    assert_eq!(laxforge(&["verify-lax", "--n", "5"]).status.code(), Some(2));
    assert_eq!(laxforge(&["verify-lax", "--format", "yaml"]).status.code(), Some(2));
}

#[test]
fn unknown_case_is_usage_error() {
    assert_eq!(laxforge(&["reduce", "--case", "IV.1"]).status.code(), Some(2));
    assert_eq!(laxforge(&["solve-lambda", "--case", "IV.1"]).status.code(), Some(2));
    assert_eq!(laxforge(&["reduce"]).status.code(), Some(2));
    assert_eq!(laxforge(&["reduce", "--case", "I.1", "--all"]).status.code(), Some(2));
}

#[test]
fn reduce_single_case_reports_spectrality() {
    let o = laxforge(&["reduce", "--case", "I.1", "--n", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("\"spectrality\": \"non-isospectral\""));
    assert!(!text.contains("census"));
}

#[test]
fn reduce_all_has_eight_cases_and_census() {
    let o = laxforge(&["reduce", "--all", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("== case ")).count(), 8);
    assert!(text.contains("non_isospectral: [\"I.1\",\"I.2\",\"I.3\",\"II.1\",\"III.1\"]"));
    assert!(text.contains("isospectral: [\"II.2\",\"II.3\",\"III.2\"]"));
    assert!(text.contains("discrepancy: true"));
}

#[test]
fn symmetry_mutations_all_killed() {
    let o = laxforge(&["verify-symmetry", "--n", "1", "--mutations"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mutants: Vec<&str> = text.lines().filter(|l| l.contains("*=")).collect();
    assert!(!mutants.is_empty());
    assert!(mutants.iter().all(|l| l.starts_with("PASS") && l.contains("[nonzero]")));
}

#[test]
fn seed_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_laxforge"))
        .args(["verify-lax", "--format", "json"])
        .env("LAXFORGE_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"seed\": 9"));
    let flag = Command::new(env!("CARGO_BIN_EXE_laxforge"))
        .args(["verify-lax", "--format", "json", "--seed", "3"])
        .env("LAXFORGE_SEED", "9")
        .output()
        .unwrap();
    assert!(stdout(&flag).contains("\"seed\": 3"));
}

#[test]
fn out_writes_file() {
    let path = scratch("report.json");
    let o = laxforge(&["ops-check", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"schema\": \"report-v1\""));
}

#[test]
fn wrong_sign_catalog_exits_one() {
    let original = include_str!("../../core/data/catalog.json");
    let broken = original.replace("\"lead\": \"-(1 + Lam^n)\"", "\"lead\": \"1 + Lam^n\"");
    assert_ne!(original, broken);
    let path = scratch("broken_catalog.json");
    std::fs::write(&path, broken).unwrap();
    let o = laxforge(&["reduce", "--case", "II.2", "--catalog", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn unreadable_catalog_is_usage_error() {
    let path = scratch("not_a_catalog.json");
    std::fs::write(&path, "{\"cases\": 3}").unwrap();
    let o = laxforge(&["reduce", "--all", "--catalog", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = laxforge(&["reduce", "--all", "--catalog", "/nonexistent/catalog.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_lambda_closed_form() {
    let o = laxforge(&["solve-lambda", "--case", "III.1", "--n", "2", "--z-end", "0.99"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS closed-form-error"));
}
