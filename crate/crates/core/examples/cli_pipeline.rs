// The command-line pipeline driven in-process: build a phantom, then audit
// it with the toy model.

use std::fs;

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let d = dir.path();
    fs::write(
        d.join("phantom.json"),
        r#"{"dims": [32, 24, 24],
            "lungs": [{"center": [9, 12, 12], "radii_mm": [6, 9, 10]}, {"center": [23, 12, 12], "radii_mm": [6, 9, 10]}],
            "blobs": [{"id": "n1", "center": [9, 10, 9], "radius_mm": 2, "hu": 30},
                      {"id": "n2", "center": [23, 13, 15], "radius_mm": 2, "hu": 25}]}"#,
    )?;
    fs::write(
        d.join("audit.json"),
        r#"{"paths": {"scan": "ph/scan.json", "nodules": "ph/nodules.json", "lobes": "ph/lobes.json", "probe": "ph/probe_n1.json"},
            "bridge": {"nfe": 20}, "shnap": {"runs": 2}, "snap": {"stride": 5}, "seed": 3,
            "model": {"transport": "toy", "spec": {"sites": [{"center": [9, 10, 9], "radius_mm": 2}, {"center": [23, 13, 15], "radius_mm": 2}],
                      "beta0": -1.5, "beta_main": [0.8, 0.3], "beta_pair": [[0, 0.2], [0.2, 0]]}}}"#,
    )?;
    let p = |s: &str| d.join(s).to_string_lossy().into_owned();
    let steps: [Vec<String>; 3] = [
        vec!["nall".into(), "phantom".into(), "--spec".into(), p("phantom.json"), "--out".into(), p("ph")],
        vec!["nall".into(), "shnap".into(), "--config".into(), p("audit.json"), "--out".into(), p("shnap")],
        vec!["nall".into(), "snap-map".into(), "--config".into(), p("audit.json"), "--out".into(), p("snap")],
    ];
    for argv in steps {
        let code = nall::cli::run(&argv);
        if code != 0 {
            return Err(format!("{} exited with {code}", argv[1]).into());
        }
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("shnap/shnap_report.json"))?)?;
    let rows = fs::read_to_string(d.join("snap/snap.csv"))?.lines().count() - 1;
    Ok(format!(
        "baseline {}, main effects {}, R2 {}\nsnap map rows: {rows}\n",
        report["baseline_mu"], report["phi_main"], report["r2"]
    ))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
