// Region attribution on a synthetic chest: each nodule is removed once by
// the bridge, all coalitions are rebuilt and scored by the toy model, and
// the game is projected onto main and pairwise effects.

use std::sync::Arc;

use nall::bridge::{BridgeConfig, IidGaussianScore};
use nall::cli::PhantomSpec;
use nall::model::{ModelHandle, ToyLmpiModelSpec, ToySite};
use nall::shnap::{shnap_explain, AuditCase, BridgeRemover};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let spec: PhantomSpec = serde_json::from_value(serde_json::json!({
        "dims": [40, 32, 30],
        "lungs": [{"center": [11, 16, 15], "radii_mm": [8, 12, 12]},
                  {"center": [29, 16, 15], "radii_mm": [8, 12, 12]}],
        "blobs": [{"id": "a", "center": [11, 12, 10], "radius_mm": 2.5, "hu": 30},
                  {"id": "b", "center": [11, 20, 20], "radius_mm": 2.0, "hu": 10},
                  {"id": "c", "center": [29, 16, 15], "radius_mm": 3.0, "hu": 40}],
        "noise_sd": 15.0, "seed": 1
    }))?;
    let phantom = spec.build()?;
    let sites: Vec<ToySite> = phantom
        .nodules
        .iter()
        .map(|n| ToySite { center: n.center, radius_mm: n.radius_mm })
        .collect();
    let mut toy = ToyLmpiModelSpec::additive(sites, -2.5, vec![0.9, 0.4, 1.3]);
    toy.beta_pair[0][2] = -0.5;
    toy.beta_pair[2][0] = -0.5;
    let model = ModelHandle::toy(toy)?;
    let case = AuditCase::from_nodules(phantom.scan, &phantom.nodules)?;
    let cfg = BridgeConfig { nfe: 50, ..BridgeConfig::default() };
    let remover = BridgeRemover::new(Arc::new(IidGaussianScore::new(-800.0, 400.0)?), cfg);
    let explanation = shnap_explain(&case, &model, &remover, 42, 3)?;
    let mut out = serde_json::to_string_pretty(&explanation.report())?;
    out += &format!("\nmodel queries: {}\n", model.queries());
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
