use std::fs;
use std::path::Path;
use std::process::Command;

use nall::snap::lattice_centers;
use nall::volume::io::read_mask;

const PHANTOM: &str = r#"{"dims": [32, 24, 24],
  "lungs": [{"center": [9, 12, 12], "radii_mm": [6, 9, 10]}, {"center": [23, 12, 12], "radii_mm": [6, 9, 10]}],
  "blobs": [{"id": "n1", "center": [9, 10, 9], "radius_mm": 2, "hu": 30, "malignancy": "malignant"},
            {"id": "n2", "center": [23, 13, 15], "radius_mm": 2, "hu": 25}],
  "noise_sd": 8, "seed": 5}"#;

const AUDIT: &str = r#"{"paths": {"scan": "ph/scan.json", "nodules": "ph/nodules.json", "lung_mask": "ph/lung_mask.json",
    "lobes": "ph/lobes.json", "probe": "ph/probe_n1.json"},
  "bridge": {"nfe": 10}, "shnap": {"runs": 2}, "snap": {"stride": 4}, "seed": 3,
  "model": {"transport": "toy", "spec": {"sites": [{"center": [9, 10, 9], "radius_mm": 2}, {"center": [23, 13, 15], "radius_mm": 2}],
    "beta0": -1.5, "beta_main": [0.8, 0.3], "beta_pair": [[0, 0.2], [0.2, 0]]}}}"#;

fn nall(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nall"))
        .current_dir(dir)
        .env_remove("NALL_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("phantom.json"), PHANTOM).unwrap();
    fs::write(dir.path().join("audit.json"), AUDIT).unwrap();
    let out = nall(dir.path(), &["phantom", "--spec", "phantom.json", "--out", "ph"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shnap_reports_are_reproducible() {
    let dir = workspace();
    let d = dir.path();
    for out in ["r1", "r2"] {
        let o = nall(d, &["shnap", "--config", "audit.json", "--out", out, "--stability"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(d.join("r1/shnap_report.json")).unwrap();
    assert_eq!(a, fs::read(d.join("r2/shnap_report.json")).unwrap());
    let report = json(&d.join("r1/shnap_report.json"));
    assert!((report["baseline_mu"].as_f64().unwrap() + 1.5).abs() < 1e-9);
    assert!((report["phi_pair"][0][1].as_f64().unwrap() - 0.2).abs() < 1e-9);
    let manifest = json(&d.join("r1/manifest.json"));
    assert_eq!(manifest["config"]["bridge"]["steps"], 1000);
    // two runs plus four naive baselines, 2^2 coalitions each
    assert_eq!(manifest["config"]["model_queries"], 2 * 4 + 4 * 4);
    assert!(d.join("r1/stability.json").exists());
}

#[test]
fn flags_and_env_override_config() {
    let dir = workspace();
    let d = dir.path();
    let o = Command::new(env!("CARGO_BIN_EXE_nall"))
        .current_dir(d)
        .env("NALL_SEED", "99")
        .args(["shnap", "--config", "audit.json", "--out", "env", "--runs", "1"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let m = json(&d.join("env/manifest.json"));
    assert_eq!(m["seed"], 99);
    assert_eq!(m["config"]["shnap"]["runs"], 1);
    let o = Command::new(env!("CARGO_BIN_EXE_nall"))
        .current_dir(d)
        .env("NALL_SEED", "99")
        .args(["shnap", "--config", "audit.json", "--out", "flag", "--runs", "1", "--seed", "4"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(json(&d.join("flag/manifest.json"))["seed"], 4);
}

#[test]
fn snap_map_rows_match_lattice() {
    let dir = workspace();
    let d = dir.path();
    let o = nall(d, &["snap-map", "--config", "audit.json", "--out", "snap", "--tau", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lung = read_mask(&d.join("ph/lung_mask.json")).unwrap();
    let summary = json(&d.join("snap/snap_summary.json"));
    let skipped = summary["skipped"].as_array().unwrap().len();
    let rows = fs::read_to_string(d.join("snap/snap.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows + skipped, lattice_centers(&lung, 4).unwrap().len());
    assert!(d.join("snap/slices/slices.json").exists());
    assert!(d.join("snap/lobes_summary.json").exists());
}

#[test]
fn bridge_diag_equal_gaussians() {
    let dir = tempfile::tempdir().unwrap();
    let o = nall(dir.path(), &["bridge-diag", "--p1", "0.5,2", "--p2", "0.5,2", "--grid", "101", "--out", "bd"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("bd/blending.csv")).unwrap();
    let kl: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(kl.len(), 101);
    assert!(kl.iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn remove_insert_and_mask_gen() {
    let dir = workspace();
    let d = dir.path();
    let o = nall(d, &["remove", "--scan", "ph/scan.json", "--mask", "ph/mask_n1.json", "--seed", "1", "--nfe", "10", "--out", "rm"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("rm/removed.raw").exists());
    let o = nall(d, &["insert", "--scan", "ph/scan.json", "--probe", "ph/probe_n2.json", "--center", "9,14,14", "--tau", "0.3", "--nfe", "10", "--out", "ins"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.join("ins/manifest.json"))["config"]["tau_index"], 300);
    let o = nall(d, &["mask-gen", "--dims", "16,16,16", "--seed", "3", "--out", "mg"]);
    assert!(o.status.success());
    assert!(read_mask(&d.join("mg/mask.json")).unwrap().count() > 0);
}

#[test]
fn stats_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..40).map(|i| format!("{}\n", (i < 23) as u8)).collect();
    fs::write(dir.path().join("b.csv"), format!("correct\n{rows}")).unwrap();
    let o = nall(dir.path(), &["stats", "binomial", "--in", "b.csv"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["k"], 23);
    assert!(v["p_two_sided"].as_f64().unwrap() > 0.05);
}

#[test]
fn failures_emit_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = nall(dir.path(), &["remove", "--scan", "missing.json", "--mask", "m.json", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["module"], "volume");
    assert!(!dir.path().join("x").exists());
    let o = nall(dir.path(), &["snap-map", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["code"], "usage");
}
