use std::io::{BufRead, BufReader};
use std::process::{Command, Stdio};
use std::time::Duration;

use nall::cli::PhantomSpec;
use nall::model::{ModelHandle, ToyHttpServer, ToyLmpiModelSpec, ToySite};
use nall::shnap::{shnap_explain, AuditCase, FillRemover};
use nall::volume::VolumeGrid;

fn setup() -> (Vec<VolumeGrid>, ToyLmpiModelSpec, AuditCase) {
    let spec: PhantomSpec = serde_json::from_value(serde_json::json!({
        "dims": [24, 16, 16],
        "lungs": [{"center": [6, 8, 8], "radii_mm": [5, 6, 6]}, {"center": [18, 8, 8], "radii_mm": [5, 6, 6]}],
        "blobs": [{"id": "a", "center": [6, 8, 6], "radius_mm": 2, "hu": 30},
                  {"id": "b", "center": [18, 8, 10], "radius_mm": 2, "hu": 30}],
        "noise_sd": 5.0, "seed": 2
    }))
    .unwrap();
    let ph = spec.build().unwrap();
    let sites = ph.nodules.iter().map(|n| ToySite { center: n.center, radius_mm: n.radius_mm }).collect();
    let mut toy = ToyLmpiModelSpec::additive(sites, -1.2, vec![0.8, 0.35]);
    toy.beta_pair[0][1] = 0.25;
    toy.beta_pair[1][0] = 0.25;
    let mut scans = vec![ph.scan.clone()];
    let mut cleared = ph.scan.clone();
    for v in cleared.voxels_mut() {
        *v = v.min(-500.0);
    }
    scans.push(cleared);
    let case = AuditCase::from_nodules(ph.scan, &ph.nodules).unwrap();
    (scans, toy, case)
}

fn write_spec(spec: &ToyLmpiModelSpec) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), serde_json::to_string(spec).unwrap()).unwrap();
    f
}

fn subprocess_handle(spec_path: &std::path::Path) -> ModelHandle {
    let cmd = vec![
        env!("CARGO_BIN_EXE_nall").to_string(),
        "toy-serve".into(),
        "--spec".into(),
        spec_path.to_string_lossy().into_owned(),
        "--stdio".into(),
    ];
    ModelHandle::subprocess(&cmd, Duration::from_secs(30)).unwrap()
}

#[test]
fn transports_agree() {
    let (scans, toy, _) = setup();
    let spec_file = write_spec(&toy);
    let local = ModelHandle::toy(toy.clone()).unwrap();
    let sub = subprocess_handle(spec_file.path());
    let server = ToyHttpServer::bind(toy, "127.0.0.1:0").unwrap();
    let http = ModelHandle::http(&format!("http://{}", server.local_addr().unwrap()), Duration::from_secs(30));
    server.spawn();
    for scan in &scans {
        let a = local.query_risk(scan).unwrap();
        assert_eq!(a, sub.query_risk(scan).unwrap());
        assert_eq!(a, http.query_risk(scan).unwrap());
    }
    assert_eq!(sub.transport_name(), "subprocess");
    assert_eq!(http.queries(), scans.len() as u64);
}

#[test]
fn binary_http_server() {
    let (scans, toy, _) = setup();
    let spec_file = write_spec(&toy);
    let mut child = Command::new(env!("CARGO_BIN_EXE_nall"))
        .args(["toy-serve", "--spec"])
        .arg(spec_file.path())
        .args(["--http", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let http = ModelHandle::http(&format!("http://{addr}"), Duration::from_secs(30));
    let local = ModelHandle::toy(toy).unwrap();
    let same = scans.iter().all(|s| local.query_risk(s).unwrap() == http.query_risk(s).unwrap());
    child.kill().ok();
    child.wait().ok();
    assert!(same);
}

#[test]
fn shnap_is_transport_independent() {
    let (_, toy, case) = setup();
    let spec_file = write_spec(&toy);
    let local = ModelHandle::toy(toy).unwrap();
    let sub = subprocess_handle(spec_file.path());
    let remover = FillRemover(-800.0);
    let a = shnap_explain(&case, &local, &remover, 1, 1).unwrap();
    let b = shnap_explain(&case, &sub, &remover, 1, 1).unwrap();
    assert_eq!(a.report(), b.report());
    assert_eq!(sub.queries(), 4);
}

#[test]
fn broken_subprocess_reports_error() {
    let (scans, _, _) = setup();
    let h = ModelHandle::subprocess(&["sh".into(), "-c".into(), "read line; echo not-json".into()], Duration::from_secs(10)).unwrap();
    assert!(h.query_risk(&scans[0]).is_err());
}
