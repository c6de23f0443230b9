use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pulsed-epr"));
    c.env_remove("PULSED_EPR_CONFIG");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--out-dir").arg(dir).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON record")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error")
}

fn schema_columns(kind: &str) -> Vec<String> {
    let schema: Value = serde_json::from_str(include_str!("../schema/columns.json")).unwrap();
    schema["files"][kind].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect()
}

fn csv_body(path: &Path) -> (Vec<String>, Vec<String>) {
    let text = fs::read_to_string(path).unwrap();
    let (comments, rest): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.starts_with('#'));
    assert_eq!(comments.len(), 3);
    (comments.iter().map(|s| s.to_string()).collect(), rest.iter().map(|s| s.to_string()).collect())
}

const ROW1: [&str; 12] =
    ["--eta", "0.828", "--xi", "0.3034", "--epsilon", "9.707e-5", "--n-bar", "1100", "--n0", "0", "--q", "1e5"];

#[test]
fn ideal_vacuum_record() {
    let dir = tempfile::tempdir().unwrap();
    let rec = stdout_json(&run(dir.path(), &["ideal", "--r", "0", "--n0", "0"]));
    assert_eq!(rec["result"]["delta_epr"], 2.0);
    assert_eq!(rec["result"]["fidelity"], 0.5);
    assert_eq!(rec["result"]["entangled"], false);
    assert!(dir.path().join("ideal.csv").exists() && dir.path().join("ideal.json").exists());
}

#[test]
fn csv_headers_follow_schema_and_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&run(dir.path(), &["ideal", "--r", "1.5"]));
    let mut args = vec!["dynamics"];
    args.extend(ROW1);
    stdout_json(&run(dir.path(), &args));
    for kind in ["ideal", "dynamics"] {
        let (comments, rows) = csv_body(&dir.path().join(format!("{kind}.csv")));
        assert_eq!(comments[0], format!("# pulsed-epr {}", env!("CARGO_PKG_VERSION")));
        assert_eq!(comments[1], format!("# command: {kind}"));
        let digest = comments[2].strip_prefix("# config-sha256: ").unwrap();
        assert_eq!(digest.len(), 64);
        assert_eq!(rows[0].split(',').collect::<Vec<_>>(), schema_columns(kind));
        let doc: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("{kind}.json"))).unwrap()).unwrap();
        assert_eq!(doc["header"]["config_sha256"], digest);
        assert_eq!(doc["header"]["version"], env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn identical_inputs_give_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut args = vec!["dynamics"];
    args.extend(ROW1);
    for d in [&a, &b] {
        stdout_json(&run(d.path(), &args));
        stdout_json(&run(
            d.path(),
            &["sweep", "--q", "1e5", "--n-bar-min", "10", "--n-bar-max", "100", "--count", "2"],
        ));
    }
    for name in ["dynamics.csv", "dynamics.json", "sweep.csv", "sweep.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let first = fs::read_to_string(a.path().join("dynamics.csv")).unwrap();
    let other = tempfile::tempdir().unwrap();
    let mut changed = args.clone();
    changed[2] = "0.8";
    stdout_json(&run(other.path(), &changed));
    let second = fs::read_to_string(other.path().join("dynamics.csv")).unwrap();
    assert_ne!(first.lines().nth(2), second.lines().nth(2), "digest tracks the inputs");
}

#[test]
fn dynamics_reproduces_reference_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["dynamics"];
    args.extend(ROW1);
    let rec = stdout_json(&run(dir.path(), &args));
    let d = rec["result"]["delta_epr"].as_f64().unwrap();
    assert!((d - 0.66).abs() < 0.01, "{d}");
    assert!(rec["result"]["commutator_error"].as_f64().unwrap() < 1e-8);
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("dynamics.json")).unwrap()).unwrap();
    assert_eq!(doc["covariance"].as_array().unwrap().len(), 4);
    assert_eq!(doc["coefficients"]["light"].as_array().unwrap().len(), 6);
}

#[test]
fn physical_config_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"scenario": "row 1", "physical": {"f_m": 3.8e6, "kappa": 3.146e6, "gamma": 38.0, "g0": 4.8,
            "g": 0.9546e6, "detuning": -3.8e6, "tau": 0.4065e-6, "n_bar": 1100, "n0": 0}, "format": "json"}"#,
    )
    .unwrap();
    let out = bin().env("PULSED_EPR_CONFIG", &cfg).arg("--out-dir").arg(dir.path()).arg("dynamics").output().unwrap();
    let base = stdout_json(&out);
    assert!(!dir.path().join("dynamics.csv").exists(), "format from the file");
    let d = base["result"]["delta_epr"].as_f64().unwrap();
    assert!((d - 0.66).abs() < 0.01, "{d}");

    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .args(["dynamics", "--n-bar", "0"])
        .output()
        .unwrap();
    let colder = stdout_json(&out);
    assert_eq!(colder["result"]["n_bar"], 0.0);
    assert!(colder["result"]["delta_epr"].as_f64().unwrap() < d);

    let out = bin().arg("--config").arg(&cfg).args(["dynamics", "--eta", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_keys_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"dimensionless": {"eta": 1, "xi": 0.1, "epsilon": 1e-4, "n_bar": 1, "n0": 0, "q": 1e5, "qq": 1},
            "extra": true, "options": {"ramp": 0.2}}"#,
    )
    .unwrap();
    let out = bin().arg("--config").arg(&cfg).args(["ideal", "--r", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    let msg = err["error"]["message"].as_str().unwrap();
    for key in ["extra", "dimensionless.qq", "options.ramp"] {
        assert!(msg.contains(key), "{msg}");
    }
}

#[test]
fn usage_and_computation_errors_are_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["dynamics", "--eta", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");

    let out = run(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");

    // r = ξ²ηεQ = 125: covariance beyond double precision
    let out = run(
        dir.path(),
        &["dynamics", "--eta", "0.5", "--xi", "0.5", "--epsilon", "1e-2", "--n-bar", "0", "--n0", "0", "--q", "1e5"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "computation");
}

#[test]
fn format_selects_files() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&run(dir.path(), &["--format", "csv", "ideal", "--r", "1"]));
    assert!(dir.path().join("ideal.csv").exists());
    assert!(!dir.path().join("ideal.json").exists());
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 1, "no temporary files left behind: {names:?}");
}

#[test]
fn figure2_preset_writes_one_pair_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let rec =
        stdout_json(&run(dir.path(), &["sweep", "--figure2", "--n-bar-min", "1", "--n-bar-max", "10", "--count", "2"]));
    assert_eq!(rec["scenarios"].as_array().unwrap().len(), 2);
    let csvs: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csvs.len(), 2);
    for p in csvs {
        let (_, rows) = csv_body(&p);
        assert_eq!(rows[0].split(',').collect::<Vec<_>>(), schema_columns("sweep"));
        assert_eq!(rows.len(), 3);
    }
}

#[test]
fn appendix_validation_reports_flags() {
    let dir = tempfile::tempdir().unwrap();
    let rec = stdout_json(&run(dir.path(), &["appendix-validate", "--points", "501"]));
    assert_eq!(rec["report"]["deviation_within_bound"], true);
    let (_, rows) = csv_body(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 502);
    assert_eq!(rows[0].split(',').collect::<Vec<_>>(), schema_columns("trajectory"));

    let rec = stdout_json(&run(dir.path(), &["appendix-validate", "--points", "101", "--shape", "step"]));
    assert_eq!(rec["report"]["worst"], "fail");
}

#[test]
fn table1_compares_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["table1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let (_, rows) = csv_body(&dir.path().join("table1.csv"));
    assert_eq!(rows.len(), 4);
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("table1.json")).unwrap()).unwrap();
    let deltas: Vec<f64> =
        doc["rows"].as_array().unwrap().iter().map(|r| r["delta_epr_min"].as_f64().unwrap()).collect();
    assert!((deltas[0] - 0.7).abs() <= 0.1 && (deltas[1] - 0.1).abs() <= 0.05, "{deltas:?}");
}

#[test]
fn optimize_with_operating_point() {
    let dir = tempfile::tempdir().unwrap();
    let rec = stdout_json(&run(
        dir.path(),
        &[
            "optimize",
            "--n-bar",
            "0.7",
            "--n0",
            "0.7",
            "--q",
            "1e5",
            "--f-m",
            "3.7e9",
            "--g0",
            "300",
            "--convention",
            "cyclic",
        ],
    ));
    let r = &rec["result"];
    assert!((r["delta_epr_min"].as_f64().unwrap() - 0.1232).abs() < 1e-3);
    assert!(r["kappa_hz"].as_f64().unwrap() > 0.0 && r["tau_s"].as_f64().unwrap() > 0.0);
}
