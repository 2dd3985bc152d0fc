use nalgebra::{DMatrix, DVector};
use nall::bridge::{remove_region, BridgeConfig, GaussianScore};
use nall::volume::{RegionMask, VolumeGrid};
use rand::{Rng, SeedableRng};

fn joint_prior(n: usize, seed: u64) -> (DVector<f64>, DMatrix<f64>) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0) / (n as f64).sqrt());
    let cov = &a * a.transpose() * 0.5 + DMatrix::identity(n, n) * 0.5;
    let mean = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (mean, cov)
}

#[test]
fn removal_matches_conditional_gaussian() {
    let dims = [4, 4, 4];
    let (mean, cov) = joint_prior(64, 11);
    let mask = RegionMask::from_fn(dims, |c| (1..3).contains(&c[0]) && (1..3).contains(&c[1]) && (1..3).contains(&c[2])).unwrap();
    let x = VolumeGrid::new(dims, [1.0; 3], (0..64).map(|i| (mean[i] + 0.25 * ((i % 5) as f64 - 2.0)) as f32).collect()).unwrap();
    let score = GaussianScore::conditioned(&mean, &cov, &mask, &x).unwrap();
    let (cm, cc) = (score.mean().clone(), score.covariance());
    let cfg = BridgeConfig::default();
    let idx = mask.indices();
    let k = idx.len();
    let n = 10_000;
    let mut sum = DVector::zeros(k);
    let mut outer = DMatrix::zeros(k, k);
    for s in 0..n {
        let out = remove_region(&x, &mask, &score, &cfg, s).unwrap();
        let v = DVector::from_fn(k, |r, _| out.voxels()[idx[r]] as f64);
        sum += &v;
        outer += &v * v.transpose();
    }
    let m = &sum / n as f64;
    let c = (&outer - &m * m.transpose() * n as f64) / (n - 1) as f64;
    let mut worst_m: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for i in 0..k {
        let se = (cc[(i, i)] / n as f64).sqrt();
        worst_m = worst_m.max(((m[i] - cm[i]) / se).abs());
        for j in 0..k {
            let se = ((cc[(i, i)] * cc[(j, j)] + cc[(i, j)].powi(2)) / n as f64).sqrt();
            worst_c = worst_c.max(((c[(i, j)] - cc[(i, j)]) / se).abs());
        }
    }
    println!("mean z {worst_m:.2} cov z {worst_c:.2}");
    assert!(worst_m < 4.0 && worst_c < 4.0);
}
