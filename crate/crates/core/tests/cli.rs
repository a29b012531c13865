use assert_cmd::Command;
use serde_json::Value;

fn bin() -> Command {
    Command::cargo_bin("hermite-bmo").unwrap()
}

fn stdout_json(out: &std::process::Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn kernel_eval_reads_pairs_from_stdin() {
    let out = bin()
        .args(["kernel-eval", "--kernel", "heat", "--points", "-"])
        .write_stdin("param,x,y\n0.5,0,0\n0.5,1,-1\n")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,x,y,value"));
    let v: f64 = lines.next().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - (3.0 / (8.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
    assert_eq!(lines.count(), 1);
}

#[test]
fn header_only_input_gives_header_only_output() {
    let out = bin()
        .args(["kernel-eval", "--kernel", "riesz(1)", "--points", "-"])
        .write_stdin("param,x,y\n")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "param,x,y,value");
}

#[test]
fn usage_errors_exit_with_two() {
    bin()
        .args(["kernel-eval", "--kernel", "laplace", "--points", "-"])
        .write_stdin("param,x,y\n0.5,0,0\n")
        .assert()
        .code(2);
    bin().args(["bmo-norm", "--function", "nope"]).assert().code(2);
    bin().args(["bmo-norm"]).assert().code(2);
    let out = bin().args(["--set", "n=7", "verify"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field `n`"));
    bin().env("HERMITE_BMO_THREADS", "many").args(["verify"]).assert().code(2);
}

#[test]
fn domain_errors_in_pairs_exit_with_two() {
    bin()
        .args(["kernel-eval", "--kernel", "heat", "--points", "-"])
        .write_stdin("param,x,y\n1.5,0,0\n")
        .assert()
        .code(2);
}

#[test]
fn config_errors_report_their_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"n\": 1,\n  \"sweep\": {\"half_width\": 2, \"points\": 8, \"pionts\": 3}\n}\n",
    )
    .unwrap();
    let out = bin().args(["--config", path.to_str().unwrap(), "verify"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("pionts") && err.contains("line 3"), "{err}");
}

#[test]
fn empty_verify_passes() {
    let out = bin().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["lines"], Value::Array(Vec::new()));
    assert_eq!(v["provenance"]["n"], 1);
}

#[test]
fn verify_overrides_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = bin()
        .args([
            "--set",
            "sweep.points=32",
            "--set",
            "checks.t1=false",
            "--set",
            &format!("output_dir={}", dir.path().display()),
            "verify",
            "--operator",
            "heat_orbit",
            "--out",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["provenance"]["sweep"]["points"], 32);
    assert_eq!(v["kernel_bounds"].as_array().unwrap().len(), 2);
    assert_eq!(v["lines"][0]["passed"], true);
    let svg = std::fs::read_to_string(dir.path().join("heat_orbit_size_ratio.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn unbounded_size_constant_fails_verification() {
    let out = bin()
        .args([
            "--set",
            "c=10",
            "--set",
            "sweep.points=32",
            "--set",
            "checks.t1=false",
            "verify",
            "--operator",
            "heat_orbit",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("heat_orbit"));
}

#[test]
fn bmo_norm_of_builtins() {
    let out = bin().args(["bmo-norm", "--function", "constant:2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["estimate"]["osc_sup"], 0.0);
    assert_eq!(v["estimate"]["norm"], 2.0);

    let out = bin()
        .args(["bmo-norm", "--function", "coordinate", "--trend", "2,4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let trend = stdout_json(&out)["trend"].as_array().unwrap().clone();
    assert_eq!(trend.len(), 2);
    assert!(trend[1]["estimate"]["norm"].as_f64().unwrap() > trend[0]["estimate"]["norm"].as_f64().unwrap());
}

#[test]
fn operator_apply_round_trips_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("h1.csv");
    bin()
        .args([
            "--set",
            "points=201",
            "operator-apply",
            "--operator",
            "heat",
            "--param",
            "0.5",
            "--function",
            "hermite:1",
        ])
        .args(["--out", first.to_str().unwrap()])
        .assert()
        .code(0);
    // feeding the output back in applies the semigroup twice
    let out = bin()
        .args([
            "--set",
            "points=201",
            "operator-apply",
            "--operator",
            "heat",
            "--param",
            "0.5",
            "--input",
        ])
        .arg(&first)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,value\n"));
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn malformed_grid_rows_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    std::fs::write(&path, "x,value\n-1,0\n0,oops\n1,0\n").unwrap();
    let out = bin()
        .args([
            "--set",
            "half_width=1",
            "--set",
            "points=3",
            "operator-apply",
            "--operator",
            "heat",
            "--param",
            "0.5",
            "--input",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("row 3"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn variation_of_explicit_orbit() {
    let out = bin().args(["variation", "--orbit", "0,1,0", "--set", "rho=3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.2599"), "{text}");
}
