use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn crgeom(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crgeom"));
    if let Some(c) = config {
        let path = dir.join("config.json");
        fs::write(&path, c).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out").arg(dir.join("out")).args(args).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn standard_sphere_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), None, &["invariants"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&dir.path().join("out/invariants.json"));
    assert_eq!(v["spherical"], true);
    let mu = v["mu_ph"]["mu"].as_f64().unwrap();
    assert!((mu + 1.0).abs() < 1e-10);
    assert!((v["mu_cartan"]["mu_trace"].as_f64().unwrap() - mu).abs() < 1e-8);
    assert_eq!(v["rigidity"]["holds"], true);
    // stdout carries the same report
    let out: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(out["mu_ph"], v["mu_ph"]);
}

#[test]
fn lens_space_divides_mu() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), Some(r#"{"manifold": {"kind": "lens", "p": 3, "q": 1}}"#), &["invariants"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&dir.path().join("out/invariants.json"));
    assert!((v["mu_ph"]["mu"].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), Some("{\n \"seed\": 1,\n \"flow\": {\"dt0\": ]\n}"), &["invariants"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config.json:3:"), "{}", stderr(&o));
}

#[test]
fn bad_resolution_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), None, &["--backend", "grid", "--resolution", "16x16", "invariants"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spherical_start_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), None, &["flow", "cartan"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&dir.path().join("out/flow_cartan.json"));
    assert_eq!(v["termination"], "fixed_point");
}

const SMALL_E: &str = r#"{"structure": {"e": {"constant": [0.05, 0.02]}}, "flow": {"max_steps": 20, "checkpoint_every": 10}}"#;

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn cartan_flow_lowers_mu() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), Some(SMALL_E), &["flow", "cartan"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/flow_cartan.csv"));
    let mu: Vec<f64> = rows.iter().filter(|r| r[7] == "1").map(|r| r[2].parse().unwrap()).collect();
    assert!(mu.len() > 1);
    for w in mu.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
    assert!(dir.path().join("out/checkpoints/cartan_000010.json").exists());
    assert!(dir.path().join("out/cartan_final.json").exists());
}

#[test]
fn restart_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), Some(SMALL_E), &["flow", "cartan"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let full_csv = fs::read_to_string(out.join("flow_cartan.csv")).unwrap();
    let full_final = fs::read(out.join("cartan_final.json")).unwrap();

    let second = tempfile::tempdir().unwrap();
    let ckpt = out.join("checkpoints/cartan_000010.json");
    let o = crgeom(second.path(), Some(SMALL_E), &["flow", "cartan", "--restart", ckpt.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tail = fs::read_to_string(second.path().join("out/flow_cartan.csv")).unwrap();
    let tail_rows: Vec<&str> = tail.lines().skip(1).collect();
    assert!(!tail_rows.is_empty());
    assert!(full_csv.ends_with(&(tail_rows.join("\n") + "\n")));
    assert_eq!(full_final, fs::read(second.path().join("out/cartan_final.json")).unwrap());
}

#[test]
fn monopole_residual_on_standard_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), None, &["monopole-residual"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&dir.path().join("out/monopole_residual.json"));
    assert_eq!(v["obstruction"]["torsion_free"], true);
    assert_eq!(v["obstruction"]["w_positive"], true);
}

#[test]
fn verify_single_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), None, &["verify", "standard"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&dir.path().join("out/verify.json"));
    assert_eq!(v["failed"], 0);
}

#[test]
fn unknown_suite_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), None, &["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn transformation_law_passes_with_shipped_signs() {
    let dir = tempfile::tempdir().unwrap();
    let o = crgeom(dir.path(), None, &["verify", "transformation-law"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn flipped_sign_bit_breaks_transformation_law() {
    for bits in [r#"{"connection": -1, "torsion_conjugate": true}"#, r#"{"connection": 1, "torsion_conjugate": false}"#] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = format!(r#"{{"sign_bits": {bits}}}"#);
        let o = crgeom(dir.path(), Some(&cfg), &["verify", "transformation-law"]);
        assert_eq!(o.status.code(), Some(2), "{bits}");
        assert!(stderr(&o).contains("transformation-law"), "{}", stderr(&o));
    }
}
