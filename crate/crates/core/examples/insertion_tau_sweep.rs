// Insertion depth trade-off: deeper blending moves the pasted nodule
// further from its source content.

use nall::bridge::{insert_region, BridgeConfig, IidGaussianScore};
use nall::volume::{RegionMask, VolumeGrid};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let dims = [16, 16, 16];
    let scan = VolumeGrid::new(dims, [1.0; 3], (0..4096).map(|i| (i as f32 * 0.61).sin() * 0.3).collect())?;
    let content = VolumeGrid::filled([5, 5, 5], [1.0; 3], 2.0)?;
    let mask = RegionMask::from_fn([5, 5, 5], |c| c.iter().map(|&v| (v as f64 - 2.0).powi(2)).sum::<f64>() <= 4.0)?;
    let score = IidGaussianScore::new(0.0, 1.0)?;
    let cfg = BridgeConfig { nfe: 50, ..BridgeConfig::default() };
    let center = [8, 8, 8];
    let pasted = insert_region(&scan, &content, &mask, center, 0, &score, &cfg, 0)?;
    let mut out = String::from("tau    mean |inserted - pasted|\n");
    for frac in [0.0, 0.1, 0.3, 0.6, 1.0] {
        let tau = cfg.schedule.index_of(frac)?;
        let seeds = 40;
        let mut dev = 0.0;
        for seed in 0..seeds {
            let y = insert_region(&scan, &content, &mask, center, tau, &score, &cfg, seed)?;
            let d: f64 = y.voxels().iter().zip(pasted.voxels()).map(|(a, b)| (a - b).abs() as f64).sum();
            dev += d / seeds as f64;
        }
        out += &format!("{frac:.1}    {:.4}\n", dev / mask.count() as f64);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
