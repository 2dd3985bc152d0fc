// Run-to-run spread of bridge-based attributions against the spread across
// four intensity-replacement baselines on the same scan.

use std::sync::Arc;

use nall::bridge::{BridgeConfig, IidGaussianScore};
use nall::cli::PhantomSpec;
use nall::model::{ModelHandle, ToyLmpiModelSpec, ToySite};
use nall::shnap::{stability_protocol, AuditCase, BridgeRemover};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let spec: PhantomSpec = serde_json::from_value(serde_json::json!({
        "dims": [36, 28, 28],
        "lungs": [{"center": [10, 14, 14], "radii_mm": [7, 10, 11]},
                  {"center": [26, 14, 14], "radii_mm": [7, 10, 11]}],
        "blobs": [{"id": "a", "center": [10, 12, 10], "radius_mm": 2.5, "hu": 20},
                  {"id": "b", "center": [26, 16, 18], "radius_mm": 2.5, "hu": 35}],
        "noise_sd": 10.0, "seed": 9
    }))?;
    let phantom = spec.build()?;
    let sites = phantom
        .nodules
        .iter()
        .map(|n| ToySite { center: n.center, radius_mm: n.radius_mm })
        .collect();
    let model = ModelHandle::toy(ToyLmpiModelSpec::additive(sites, -1.8, vec![1.1, 0.6]))?;
    let case = AuditCase::from_nodules(phantom.scan, &phantom.nodules)?;
    let cfg = BridgeConfig { nfe: 40, ..BridgeConfig::default() };
    let remover = BridgeRemover::new(Arc::new(IidGaussianScore::new(-800.0, 400.0)?), cfg);
    let cmp = stability_protocol(&case, &model, &remover, 5, 5)?;
    let mut out = String::from("term      runs std   naive std\n");
    for (r, n) in cmp.runs.coefficients.iter().zip(&cmp.naive.coefficients) {
        out += &format!("{:<9} {:<10.4} {:.4}\n", format!("{:?}", r.players), r.logit_std, n.logit_std);
    }
    out += &format!(
        "median logit std: runs {:.4}, naive {:.4}\n",
        cmp.runs.median_logit_std(),
        cmp.naive.median_logit_std()
    );
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
