use std::fs;
use std::process::{Command, Output};

fn weylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylab"))
        .args(args)
        .env("WEYLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn constants_csv_has_all_dimensions() {
    let o = weylab(&["constants"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,N,kappa,kappa_prime,sphere_measure");
    assert_eq!(lines.len(), 6);
    let kappa2: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((kappa2 - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
}

#[test]
fn constants_json_single_dimension() {
    let o = weylab(&["constants", "--d", "3", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["d"], 3);
    assert_eq!(v[0]["N"], 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(weylab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        weylab(&["spectrum", "--window", "9,3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        weylab(&["spectrum", "--operator", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        weylab(&["verify", "--only", "missing"]).status.code(),
        Some(2)
    );
    assert_eq!(weylab(&["constants", "--d", "1"]).status.code(), Some(2));
}

#[test]
fn spectrum_csv_and_json() {
    let o = weylab(&["spectrum", "--radius", "10", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,mu,scaled"));
    // 317 lattice points with |n| <= 10.
    assert_eq!(lines.count(), 317);

    let o = weylab(&[
        "spectrum",
        "--operator",
        "dbar",
        "--radius",
        "10",
        "--window",
        "20,100",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dim"], 2 * 317);
    assert_eq!(v["estimate"]["window"], serde_json::json!([20, 100]));
    let c = v["estimate"]["coefficient"].as_f64().unwrap();
    assert!(
        (c - (2.0 * std::f64::consts::PI).sqrt()).abs() < 0.15,
        "{c}"
    );
}

#[test]
fn spectrum_from_operator_file() {
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("op.json");
    let spec = r#"{"kind": "multiplier", "alpha": -1.0,
        "g": {"kind": "polynomial", "dim": 2, "terms": [{"exponents": [0, 0], "coeff": [1.0, 0.0]}]}}"#;
    fs::write(&op, spec).unwrap();
    let out = dir.path().join("run");
    let o = weylab(&[
        "spectrum",
        "--operator-json",
        op.to_str().unwrap(),
        "--radius",
        "12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("spectrum.csv"))
        .unwrap()
        .starts_with("k,mu,scaled\n1,1,1\n"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(v["estimate"]["p"], 2.0);
}

#[test]
fn verify_writes_reports_and_report_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = weylab(&[
        "verify", "--only", "E1,E3-d2", "--radius", "40", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("E3-d2.json").exists());
    assert!(dir.path().join("E3-d2-spectrum.csv").exists());

    let o = weylab(&["report", "--out", out, "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["E1", "E3-d2"]);
    assert_eq!(v[1]["R"], 40.0);
}

#[test]
fn failing_gate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.json");
    let suite = r#"{"schema_version": 1, "experiments": [
        {"id": "E3", "name": "tight", "d": 2, "radius": 12.0, "tol": 1e-9, "stability": null,
         "g": {"kind": "polynomial", "dim": 2, "terms": [{"exponents": [0, 0], "coeff": [1.0, 0.0]}]}}]}"#;
    fs::write(&cfg, suite).unwrap();
    let o = weylab(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL,tight,E3"));

    fs::write(&cfg, r#"{"schema_version": 99, "experiments": []}"#).unwrap();
    assert_eq!(
        weylab(&["verify", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}
