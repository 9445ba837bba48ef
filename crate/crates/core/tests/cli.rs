use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_measdisc")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn validate_fixtures() {
    for (name, valid, violation) in [
        ("trine.json", true, None),
        ("orthogonal_trine.json", true, None),
        ("incomplete.json", false, Some("NotComplete")),
        ("non_psd.json", false, Some("NotPositive")),
    ] {
        let path = fixture(name);
        let o = run(&["validate", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(if valid { 0 } else { 2 }), "{name}");
        let v = json(&o);
        assert_eq!(v["valid"], Value::Bool(valid), "{name}");
        assert_eq!(v["violation"].as_str(), violation, "{name}");
    }
}

#[test]
fn validate_reports_completeness_deviation() {
    let path = fixture("incomplete.json");
    let v = json(&run(&["validate", path.to_str().unwrap()]));
    assert!((f(&v["diagnostics"], "completeness") - 0.05).abs() < 1e-9, "{v}");
}

#[test]
fn malformed_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["validate", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["validate", missing.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn perfect_example_pair() {
    let (m, n) = (fixture("trine.json"), fixture("orthogonal_trine.json"));
    let o = run(&["perfect", m.to_str().unwrap(), n.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(f(&v, "cb_pe").abs() < 1e-12);
    assert!((f(&v, "simple_min_overlap") - 1.0 / 6.0).abs() < 1e-9);
    assert!((f(&v, "simple_distance") - 4.0 / 3.0).abs() < 1e-6);
}

#[test]
fn perfect_finds_binary_witness() {
    let (m, n) = (fixture("witness_m.json"), fixture("witness_n.json"));
    let v = json(&run(&["perfect", m.to_str().unwrap(), n.to_str().unwrap()]));
    assert!(v["binary_witness"].is_object(), "{v}");
    assert!(f(&v, "cb_pe").abs() < 1e-12);
}

#[test]
fn perfect_identical_devices() {
    let m = fixture("trine.json");
    let v = json(&run(&["perfect", m.to_str().unwrap(), m.to_str().unwrap()]));
    assert!(v["binary_witness"].is_null());
    assert!((f(&v, "cb_pe") - 0.5).abs() < 1e-9);
}

#[test]
fn discriminate_projective_min_error() {
    let o = run(&["discriminate", "--projective", "--F", "0.5", "--eta", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let r = &json(&o)["report"];
    let expected = 0.5 * (1.0 - (1.0 - 0.25f64).sqrt());
    assert!((f(r, "p_e") - expected).abs() < 1e-10, "{r}");
}

#[test]
fn discriminate_projective_unambiguous() {
    let v = json(&run(&["discriminate", "--projective", "--F", "0.6", "--mode", "unambiguous"]));
    let r = &v["report"];
    assert!((f(r, "p_f") - 0.6).abs() < 1e-10, "{r}");
    assert!(f(r, "p_e").abs() < 1e-12);
}

#[test]
fn discriminate_exit_codes() {
    let infeasible = run(&["discriminate", "--noisy", "--mu", "0.5", "--nu", "0.5", "--mode", "unambiguous"]);
    assert_eq!(infeasible.status.code(), Some(3));
    assert_eq!(run(&["discriminate", "--projective", "--mode", "fixed-failure"]).status.code(), Some(4));
    assert_eq!(run(&["discriminate", "--projective", "--eta", "1.5"]).status.code(), Some(4));
    assert_eq!(run(&["discriminate", "--bogus"]).status.code(), Some(4));
}

#[test]
fn discriminate_fixed_failure() {
    let v = json(&run(&["discriminate", "--projective", "--F", "0.5", "--eta", "0.7", "--mode", "fixed-failure", "--pf", "0.2"]));
    let r = &v["report"];
    assert!((f(r, "p_f") - 0.2).abs() < 1e-9, "{r}");
    assert!(f(r, "p_e") > 0.0 && f(r, "p_e") < 0.0556);
}

#[test]
fn discriminate_filters_reduces_to_qubit() {
    let o = run(&["discriminate", "--filters", "--dim", "4", "--F", "0.3", "--eta", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let full = f(&v["report"], "p_e");
    let reduced = f(&v["reduced_report"], "p_e");
    assert!((full - reduced).abs() < 1e-10, "{v}");
    assert!((f(&v["reduction"], "overlap") - 0.3).abs() < 1e-10);
}

#[test]
fn trine_sweep_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&["trine-sweep", "--steps", "37", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, measdisc::cli::SWEEP_HEADER);
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 37);
    for row in &rows {
        let theta = row[0];
        let opt = measdisc::trine::trine_optimal_pf(theta);
        assert!((row[2] - opt).abs() <= 1e-11 * opt.abs().max(1e-300), "θ = {theta}");
        assert!(row[4] >= 0.0);
    }
    let last = rows.last().unwrap();
    assert!((last[0] - std::f64::consts::PI).abs() < 1e-11);
    assert!((last[4] - 1.0 / 6.0).abs() < 1e-11);
}

#[test]
fn trine_sweep_to_stdout() {
    let o = run(&["trine-sweep", "--theta-min", "0", "--theta-max", "180", "--steps", "3", "--deg"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], measdisc::cli::SWEEP_HEADER.join(","));
}

#[test]
fn oracle_is_deterministic() {
    let args = ["oracle", "--target", "state-pair", "--F", "0.4", "--eta", "0.3", "--seed", "7", "--restarts", "3"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let p_e = f(&json(&a), "value");
    let helstrom = 0.5 * (1.0 - (1.0 - 4.0 * 0.3 * 0.7 * 0.16f64).sqrt());
    assert!((p_e - helstrom).abs() < 1e-6);
}

#[test]
fn oracle_trine_states() {
    let v = json(&run(&["oracle", "--target", "trine-states"]));
    assert!((f(&v, "value") - (2.0 + 3f64.sqrt()) / 6.0).abs() < 1e-6, "{v}");
}

#[test]
fn oracle_min_sum_overlap_needs_files() {
    assert_eq!(run(&["oracle", "--target", "min-sum-overlap"]).status.code(), Some(4));
    let (m, n) = (fixture("witness_m.json"), fixture("witness_n.json"));
    let v = json(&run(&["oracle", "--target", "min-sum-overlap", "--files", m.to_str().unwrap(), n.to_str().unwrap()]));
    assert!(f(&v, "value") < 1e-9, "{v}");
}

#[test]
fn help_and_version() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}
