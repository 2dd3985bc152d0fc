// Region removal under an analytic Gaussian prior: the masked voxels are
// resampled and their empirical moments approach the conditional Gaussian.

use nalgebra::{DMatrix, DVector};
use nall::bridge::{remove_region, BridgeConfig, GaussianScore};
use nall::volume::{RegionMask, VolumeGrid};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let dims = [4, 4, 4];
    let n = 64;
    // Exponentially decaying correlation along the linear index.
    let cov = DMatrix::from_fn(n, n, |i, j| 0.8f64.powi((i as i32 - j as i32).abs()));
    let mean = DVector::from_fn(n, |i, _| (i as f64 * 0.3).sin());
    let x = VolumeGrid::new(dims, [1.0; 3], (0..n).map(|i| (mean[i] + 0.5) as f32).collect())?;
    let mask = RegionMask::from_fn(dims, |c| c.iter().all(|&v| (1..3).contains(&v)))?;
    let score = GaussianScore::conditioned(&mean, &cov, &mask, &x)?;
    let cfg = BridgeConfig::default();
    let idx = mask.indices();
    let draws = 2000;
    let mut sum = vec![0.0; idx.len()];
    for seed in 0..draws {
        let y = remove_region(&x, &mask, &score, &cfg, seed)?;
        for (i, (a, b)) in x.voxels().iter().zip(y.voxels()).enumerate() {
            if !mask.at(i) && a != b {
                return Err("observed voxel changed".into());
            }
        }
        for (s, &i) in sum.iter_mut().zip(&idx) {
            *s += y.voxels()[i] as f64;
        }
    }
    let mut worst: f64 = 0.0;
    for (r, s) in sum.iter().enumerate() {
        let se = (score.covariance()[(r, r)] / draws as f64).sqrt();
        worst = worst.max(((s / draws as f64 - score.mean()[r]) / se).abs());
    }
    Ok(format!(
        "{} editable voxels, {draws} draws: largest mean deviation {worst:.2} standard errors\n",
        idx.len()
    ))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
