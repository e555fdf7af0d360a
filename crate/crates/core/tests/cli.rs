use std::fs;
use std::process::Command;

use serde_json::Value;
use sphere_strichartz::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sphere-strichartz").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn summary_value(stderr: &str, key: &str) -> f64 {
    let prefix = format!("# {key} = ");
    let line = stderr.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("{key} missing in {stderr}"));
    line.parse().unwrap()
}

#[test]
fn kappa_reports_value_and_branch() {
    let (code, out, err) = run(&["kappa", "--d", "2", "--p", "8"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "d,p,q,kappa_p,kappa_pq,branch");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.25);
    assert_eq!(row[5], "supercritical");
    assert!(err.contains("branch = supercritical"));
}

#[test]
fn identity_check_is_exact() {
    let (code, _, err) = run(&["identity-check", "--d", "2", "--N", "16", "--seed", "7"]);
    assert_eq!(code, 0);
    assert!(summary_value(&err, "max_relative_error") <= 1e-10);
}

#[test]
fn zonal_sweep_slope() {
    let (code, out, err) = run(&["sweep", "--p", "inf", "--family", "zonal", "--n", "16:256"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 10);
    assert!((summary_value(&err, "slope") - 0.5).abs() <= 0.02);
}

#[test]
fn json_document_has_rows_and_summary() {
    let (code, out, _) = run(&["sweep", "--p", "4", "--family", "highest-weight", "--n", "16,32,64", "--format", "json"]);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    assert!(doc["summary"]["slope"].as_f64().unwrap() > 0.0);
}

#[test]
fn fixed_seed_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let path = path.to_str().unwrap();
        let (code, out, _) = run(&["strichartz", "--p", "4", "--q", "4", "--N", "8", "--samples", "2", "--seed", "7", "--output", path]);
        assert_eq!(code, 0);
        assert!(out.is_empty());
    }
    let first = fs::read(&a).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, fs::read(&b).unwrap());
    let (_, other, _) = run(&["strichartz", "--p", "4", "--q", "4", "--N", "8", "--samples", "2", "--seed", "8"]);
    assert_ne!(first, other.into_bytes());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"version": 1, "d": 3, "p": "inf"}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, out, _) = run(&["kappa", "--config", cfg]);
    assert_eq!(code, 0);
    let row: Vec<String> = out.lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row[0], "3");
    assert_eq!(row[3].parse::<f64>().unwrap(), 1.0);
    let (_, out, _) = run(&["kappa", "--config", cfg, "--d", "2"]);
    assert_eq!(out.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse::<f64>().unwrap(), 0.5);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"version": 1, "colour": "red"}"#).unwrap();
    assert_eq!(run(&["kappa", "--config", bad.to_str().unwrap()]).0, 1);
    fs::write(&bad, r#"{"d": 2}"#).unwrap();
    assert_eq!(run(&["kappa", "--config", bad.to_str().unwrap()]).0, 1);
}

#[test]
fn potential_solver_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = |eps: f64| {
        format!(
            r#"{{"version": 1, "terms": [{{"time_coeffs": [{{"k": 1, "re": 0.5}}, {{"k": -1, "re": 0.5}}],
                "spatial_coeffs": [{{"n": 1, "m": 0, "re": {eps}}}]}}]}}"#
        )
    };
    let weak = dir.path().join("weak.json");
    let strong = dir.path().join("strong.json");
    fs::write(&weak, spec(0.02)).unwrap();
    fs::write(&strong, spec(40.0)).unwrap();

    let (code, _, err) = run(&["solve-potential", "--potential", weak.to_str().unwrap(), "--N", "4", "--p", "4", "--tol", "1e-8"]);
    assert_eq!(code, 0, "{err}");
    assert!(summary_value(&err, "contraction_ratio") <= 0.5);
    assert!(summary_value(&err, "residual") <= 1e-6);
    assert!(err.contains("smallness_satisfied = true"));

    let (code, _, err) = run(&["solve-potential", "--potential", strong.to_str().unwrap(), "--N", "3", "--M", "32"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn binary_exit_statuses() {
    let bin = env!("CARGO_BIN_EXE_sphere-strichartz");
    let ok = Command::new(bin).args(["kappa", "--p", "6"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("critical"));
    let bad = Command::new(bin).args(["kappa", "--p", "0.5"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
    let unknown = Command::new(bin).arg("nonsense").output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
}
