// Insertion sweep: a nodule cut from the scan is pasted and blended at
// every lattice center in the lungs, then aggregated by lobe and regressed
// on distance to the pleura.

use nall::bridge::{BridgeConfig, IidGaussianScore};
use nall::cli::PhantomSpec;
use nall::model::{ModelHandle, ToyLmpiModelSpec, ToySite};
use nall::snap::{aggregate_by_lobe, radial_profile, snap_map, InsertionProbe, SnapProber};
use nall::stats::ols_fit;
use nall::volume::distance_to_boundary;

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let spec: PhantomSpec = serde_json::from_value(serde_json::json!({
        "dims": [40, 32, 32],
        "lungs": [{"center": [11, 16, 16], "radii_mm": [8, 12, 13]},
                  {"center": [29, 16, 16], "radii_mm": [8, 12, 13]}],
        "blobs": [{"id": "src", "center": [29, 16, 16], "radius_mm": 2.0, "hu": 40, "malignancy": "malignant"}],
        "seed": 3
    }))?;
    let ph = spec.build()?;
    let probe = InsertionProbe::from_nodule(&ph.scan, &ph.nodules[0], 2)?;
    // Remove the source nodule so only inserted copies are scored.
    let mut scan = ph.scan.clone();
    for i in nall::volume::sphere_mask(scan.dims(), scan.spacing_mm(), &ph.nodules[0])?.indices() {
        scan.voxels_mut()[i] = -800.0;
    }
    // Sites spread through the right lung; their weights grow toward the centre.
    let sites: Vec<ToySite> = [[11, 10, 10], [11, 16, 16], [11, 22, 22], [8, 16, 9]]
        .iter()
        .map(|&c| ToySite { center: c, radius_mm: 1.5 })
        .collect();
    let model = ModelHandle::toy(ToyLmpiModelSpec::additive(sites, -2.0, vec![0.3, 1.0, 0.4, 0.2]))?;
    let score = IidGaussianScore::new(-800.0, 400.0)?;
    let cfg = BridgeConfig { nfe: 20, ..BridgeConfig::default() };
    let tau = cfg.default_tau_index();
    let prober = SnapProber::new(&scan, &ph.lung, &model, &score, &cfg, tau)?;
    let map = snap_map(&prober, &probe, 3, 17)?;
    let lobes = aggregate_by_lobe(&map, &ph.lobes)?;
    let mut out = format!("{} centers ({} skipped), base logit {:.3}\n", map.len(), map.skipped.len(), map.base_logit);
    for g in &lobes.groups {
        out += &format!("{:<13} n={:<4} mean {:.4} sd {:.4}\n", g.lobe.name(), g.count, g.mean, g.std);
    }
    let radial = radial_profile(&map, &distance_to_boundary(&ph.lung, scan.spacing_mm())?)?;
    let design: Vec<Vec<f64>> = radial.iter().map(|p| vec![1.0, p.distance_mm]).collect();
    let y: Vec<f64> = radial.iter().map(|p| p.psi).collect();
    let fit = ols_fit(&design, &y)?;
    out += &format!("psi ~ distance: slope {:.4} per mm (p {:.3})\n", fit.coefficients[1], fit.p_values[1]);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
