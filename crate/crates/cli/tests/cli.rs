//! End-to-end runs of the `crestfield` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, cmd: &str, problem: &str, extra: &[&str]) -> Output {
    let path = dir.join("problem.json");
    std::fs::write(&path, problem).unwrap();
    Command::new(env!("CARGO_BIN_EXE_crestfield"))
        .arg(cmd)
        .arg("--problem")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TENT_1D: &str = r#"{
  "domain": { "dim": 1, "bounds": [[0, 1]], "resolution": [201] },
  "supremand": { "catalog": "eikonal" },
  "boundary": { "catalog": "zero" },
  "field": { "expr": ["min(x1, 1 - x1)"] }
}"#;

#[test]
fn evaluate_tent_has_unit_crest() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), "evaluate", TENT_1D, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(dir.path());
    assert_eq!(r["provenance"]["tool"], "crestfield");
    assert_eq!(r["provenance"]["problemSha256"].as_str().unwrap().len(), 64);
    let crest = r["report"]["energies"]["crest"].as_array().unwrap();
    for c in crest {
        assert!((c.as_f64().unwrap() - 1.0).abs() < 0.01, "crest {c}");
    }
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn evaluate_zero_field_is_degenerate() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        "evaluate",
        &TENT_1D.replace("min(x1, 1 - x1)", "0"),
        &[],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn malformed_problem_reports_the_path() {
    let dir = TempDir::new().unwrap();
    let bad = TENT_1D.replace(r#""resolution": [201]"#, r#""resolution": ["many"]"#);
    let out = run(dir.path(), "evaluate", &bad, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("domain.resolution"),
        "{}",
        stderr(&out)
    );
    let unknown = TENT_1D.replace(r#""dim": 1"#, r#""dim": 1, "shape": "box""#);
    let out = run(dir.path(), "evaluate", &unknown, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("shape"), "{}", stderr(&out));
}

#[test]
fn missing_problem_file_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_crestfield"))
        .args(["evaluate", "--problem"])
        .arg(dir.path().join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mcshane_solve_writes_the_distance_function() {
    let dir = TempDir::new().unwrap();
    let problem = r#"{
      "domain": { "dim": 1, "bounds": [[0, 1]], "resolution": [101] },
      "supremand": { "catalog": "eikonal" },
      "boundary": { "catalog": "zero" },
      "lambda": 1.0,
      "solver": { "method": "mcshane_min" }
    }"#;
    let out = run(dir.path(), "solve", problem, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# crestfield"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    let centre = rows.iter().find(|r| (r[0] - 0.5).abs() < 1e-12).unwrap();
    assert!((centre[1] - 0.5).abs() < 1e-12, "u(0.5) = {}", centre[1]);

    // the written field feeds back into verify
    let out = Command::new(env!("CARGO_BIN_EXE_crestfield"))
        .args(["verify", "--problem"])
        .arg(dir.path().join("problem.json"))
        .arg("--field")
        .arg(dir.path().join("field.csv"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(dir.path());
    assert_eq!(r["report"]["isMinimiser"], true);
    assert_eq!(r["report"]["isSolution"], true);
}

#[test]
fn verify_agrees_on_tent_and_parabola() {
    for (expr, verdict) in [("min(x1, 1 - x1)", true), ("x1^2", false)] {
        let dir = TempDir::new().unwrap();
        let out = run(
            dir.path(),
            "verify",
            &TENT_1D.replace("min(x1, 1 - x1)", expr),
            &[],
        );
        assert_eq!(out.status.code(), Some(0), "{expr}: {}", stderr(&out));
        let r = report(dir.path());
        assert_eq!(r["report"]["isMinimiser"], verdict, "{expr}");
        assert_eq!(r["report"]["isSolution"], verdict, "{expr}");
    }
}

#[test]
fn loose_constancy_tolerance_gives_an_inconsistent_verdict() {
    let dir = TempDir::new().unwrap();
    let problem = TENT_1D
        .replace("min(x1, 1 - x1)", "x1^2")
        .replace(r#""field""#, r#""verify": { "tolConst": 10.0 }, "field""#);
    let out = run(dir.path(), "verify", &problem, &[]);
    assert_eq!(out.status.code(), Some(6), "{}", stderr(&out));
    assert_eq!(report(dir.path())["report"]["verdictConsistent"], false);
}

#[test]
fn sweep_rejects_descending_exponents() {
    let dir = TempDir::new().unwrap();
    let problem = TENT_1D.replace(r#""field""#, r#""p": [4, 2], "field""#);
    let out = run(dir.path(), "sweep", &problem, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn sweep_writes_a_monotone_table() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        "sweep",
        &TENT_1D.replace("min(x1, 1 - x1)", "sin(3*x1)"),
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let ep: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(ep.len() >= 8);
    assert!(ep.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn conformal_solve_reports_alpha_and_trace() {
    let dir = TempDir::new().unwrap();
    let problem = r#"{
      "domain": { "dim": 1, "bounds": [[0, 1]], "resolution": [129] },
      "supremand": { "catalog": "trace_plus", "g": "0" },
      "boundary": { "catalog": "zero" },
      "lambda": 4.0,
      "solver": { "method": "conformal", "m": 2 }
    }"#;
    let out = run(dir.path(), "solve", problem, &["--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(dir.path());
    assert_eq!(r["provenance"]["seed"], 5);
    let alpha = &r["report"]["alpha"];
    assert!((alpha["min"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert!((alpha["max"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert!(r["report"]["iterations"].is_array());
    assert_eq!(r["report"]["lambda"]["rule"], "conformal");
}

#[test]
fn subcritical_level_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let problem = r#"{
      "domain": { "dim": 1, "bounds": [[0, 1]], "resolution": [65] },
      "supremand": { "catalog": "eikonal" },
      "boundary": { "catalog": "affine", "c0": [0], "grad": [[2]] },
      "lambda": 1.0,
      "solver": { "method": "refine" }
    }"#;
    let out = run(dir.path(), "solve", problem, &[]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}
