use std::fs;
use std::path::Path;
use std::process::Command;

use isofcq_cli::{main_with, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["isofcq"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const ROUND_CYLINDER: &str = r#"{
  "schema": 1,
  "surface": {"kind": "cylinder", "profile": {"kind": "constant", "value": 2.0}},
  "grid": {"n": 512, "u_min": 0.0, "u_max": 1.0, "periodic": false},
  "depth": 6,
  "checks": ["conservation", "parallelism", "type1"]
}"#;

#[test]
fn round_cylinder_passes_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cyl.json", ROUND_CYLINDER);
    let out_dir = tmp.path().join("out");
    let (code, stdout, _) = run(&["report", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS, "{stdout}");
    assert!(stdout.contains("type <= 1 (euclidean space form in E(v_inf))"), "{stdout}");
    let report = fs::read_to_string(out_dir.join("report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["detection"]["location"]["in_e_v_infinity"], true);
    for n in 0..=6 {
        assert!(out_dir.join(format!("fields/coefficient_m{n}.csv")).exists());
    }
    assert!(out_dir.join("fields/curvature.csv").exists());
}

#[test]
fn negative_r0_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let body = ROUND_CYLINDER.replace("\"depth\": 6,", "\"depth\": 6, \"r\": [-1.0],");
    let cfg = write_config(tmp.path(), "bad.json", &body);
    let (code, _, err) = run(&["fcq", "--config", &cfg]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("r0 must be positive"), "{err}");
}

#[test]
fn unknown_keys_and_missing_files_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let body = ROUND_CYLINDER.replace("\"schema\": 1,", "\"schema\": 1, \"extra\": true,");
    let cfg = write_config(tmp.path(), "extra.json", &body);
    assert_eq!(run(&["detect", "--config", &cfg]).0, EXIT_CONFIG);
    assert_eq!(run(&["detect", "--config", "/nonexistent.json"]).0, EXIT_CONFIG);
    assert_eq!(run(&["detect"]).0, EXIT_CONFIG);
}

#[test]
fn noisy_sampled_profile_fails_type_one() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 256;
    let samples: Vec<String> = (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64 * 20.0;
            // deterministic wiggle standing in for smoothed noise
            format!("{}", 1.0 + 0.3 * (0.7 * u).sin() + 0.1 * (1.9 * u + 0.4).cos())
        })
        .collect();
    let body = format!(
        r#"{{"schema": 1,
            "surface": {{"kind": "cylinder", "profile": {{"kind": "samples", "values": [{}]}}}},
            "grid": {{"n": {n}, "u_min": 0.0, "u_max": 20.0, "periodic": false}},
            "depth": 3, "checks": ["type1"]}}"#,
        samples.join(",")
    );
    let cfg = write_config(tmp.path(), "noisy.json", &body);
    let (code, stdout, _) = run(&["detect", "--config", &cfg]);
    assert_eq!(code, EXIT_FAIL, "{stdout}");
    assert!(stdout.contains("type1"));
}

#[test]
fn overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cyl.json", ROUND_CYLINDER);
    let (code, stdout, _) = run(&["fcq", "--config", &cfg, "--depth", "3", "--grid-n", "128", "--json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["grid"]["n"], 128);
    assert_eq!(v["series"]["depth"], 3);
    let (_, stdout, _) = run(&["detect", "--config", &cfg, "--tol", "1e-4", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["tolerances"]["detect"], 1e-4);
}

#[test]
fn binary_output_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cyl.json", ROUND_CYLINDER);
    let exe = env!("CARGO_BIN_EXE_isofcq");
    let once = || Command::new(exe).args(["report", "--config", &cfg, "--json"]).output().unwrap();
    let (a, b) = (once(), once());
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}
