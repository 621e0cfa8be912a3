mod common;

use tempnet::cli::run;

use common::data;

fn tempnet(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["tempnet"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("tempnet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn solve_reports_one_contact() {
    let (code, out, _) = tempnet(&["solve", &data("toy4.tnp"), "--max-contacts", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("minimum cardinality: 1"), "{out}");
    assert!(out.contains("pre-B -- pre-D"), "{out}");
}

#[test]
fn solve_without_contacts_fails() {
    let (code, out, _) = tempnet(&["solve", &data("toy4.tnp"), "--max-contacts", "0", "--format", "json"]);
    assert_eq!(code, 1);
    assert!(out.contains("\"minimum_cardinality\": null"));
}

#[test]
fn check_and_filter() {
    let toy = data("toy4.tnp");
    assert_eq!(tempnet(&["check", &toy, "--contacts", "B:D"]).0, 0);
    let (code, out, _) = tempnet(&["check", &toy, "--contacts", "B:C"]);
    assert_eq!(code, 1);
    assert!(out.contains("not admissible"), "{out}");
    let (code, out, _) = tempnet(&["filter", &toy, "--contacts", "B:C"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("feasible"));
    // pre-E lives before 301, pre-C after 799
    let (code, out, _) = tempnet(&["filter", &toy, "--contacts", "E:C", "--format", "json"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["feasible"], false);
    assert!(!v["certificate"].as_array().unwrap().is_empty());
    let (code, out, _) = tempnet(&["check", &toy, "--contacts", "E:C"]);
    assert_eq!(code, 1);
    assert!(out.contains("do not overlap"), "{out}");
    let (code, out, _) = tempnet(&["check", &toy, "--contacts", "E:C", "--no-overlap-prefilter", "--temporal-first"]);
    assert_eq!(code, 1);
    assert!(out.contains("temporally infeasible"), "{out}");
}

#[test]
fn essential_states() {
    let (code, out, _) = tempnet(&["essential", &data("toy4.tnp")]);
    assert_eq!(code, 0);
    assert_eq!(out, "1: 0 1\n");
}

#[test]
fn dot_output() {
    let toy = data("toy4.tnp");
    let (code, out, _) = tempnet(&["export-dot", &toy, "--contacts", "B:D", "--label"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph"));
    assert_eq!(out.matches("dir=none").count(), 1);
    let path = scratch("solve.dot");
    let (code, _, _) = tempnet(&["solve", &toy, "--dot", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let dot = std::fs::read_to_string(&path).unwrap();
    assert!(dot.contains("pre-"));
}

#[test]
fn input_errors_exit_2() {
    let toy = data("toy4.tnp");
    let (code, _, err) = tempnet(&["solve", "/nonexistent/problem.tnp"]);
    assert_eq!(code, 2);
    assert!(err.contains("error"));
    assert_eq!(tempnet(&["solve", &toy, "--format", "xml"]).0, 2);
    assert_eq!(tempnet(&["solve", &toy, "--mode", "fastest"]).0, 2);
    assert_eq!(tempnet(&["check", &toy, "--contacts", "B:Q"]).0, 2);
    assert_eq!(tempnet(&["check", &toy, "--contacts", "R:B"]).0, 2);
    assert_eq!(tempnet(&["bogus"]).0, 2);
    assert_eq!(tempnet(&[]).0, 2);

    let bad = scratch("bad.tnp");
    std::fs::write(&bad, "%phylogeny\nedge R E\n").unwrap();
    let (code, _, err) = tempnet(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 1") && err.contains("root"), "{err}");
}

#[test]
fn help_exits_0() {
    let (code, out, _) = tempnet(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("solve"));
}

#[test]
fn oracle_flag_agrees() {
    let toy = data("toy4.tnp");
    let plain = tempnet(&["solve", &toy, "--format", "json"]);
    let oracle = tempnet(&["solve", &toy, "--format", "json", "--oracle"]);
    assert_eq!(plain.0, 0);
    // toy4 systems are larger than the default feasibility-oracle limit
    assert_eq!(oracle.0, 2, "{}", oracle.2);
    assert!(oracle.2.contains("too large"));
}
