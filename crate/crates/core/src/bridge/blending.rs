use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use super::schedule::Schedule;
use super::BridgeError;

/// Mean and covariance of a Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, BridgeError> {
        let d = mean.len();
        if d == 0 || cov.shape() != (d, d) {
            return Err(BridgeError::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        if cov.clone().cholesky().is_none() {
            return Err(BridgeError::NotPositiveDefinite);
        }
        Ok(Self { mean, cov })
    }

    /// One-dimensional N(mean, sd²).
    pub fn scalar(mean: f64, sd: f64) -> Result<Self, BridgeError> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, sd * sd))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Forward marginal N(α m, α² V + β I).
    fn marginal(&self, alpha: f64, beta: f64) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim();
        (
            &self.mean * alpha,
            &self.cov * (alpha * alpha) + DMatrix::identity(d, d) * beta,
        )
    }
}

/// KL and relative Fisher information along a time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlendingCurve {
    pub t: Vec<f64>,
    pub kl: Vec<f64>,
    pub rfi: Vec<f64>,
    /// KL(t) − KL(0) + ½∫₀ᵗ J, by the trapezoid rule on the grid.
    pub residual: Vec<f64>,
}

impl BlendingCurve {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn chol(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, BridgeError> {
    m.cholesky().ok_or(BridgeError::NotPositiveDefinite)
}

fn log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    c.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum()
}

fn gaussian_kl(m1: &DVector<f64>, s1: &DMatrix<f64>, m2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<f64, BridgeError> {
    let (c1, c2) = (chol(s1.clone())?, chol(s2.clone())?);
    let d = m1.len() as f64;
    let trace = c2.solve(s1).trace();
    let diff = m2 - m1;
    let quad = diff.dot(&c2.solve(&diff));
    Ok((0.5 * (trace + quad - d + log_det(&c2) - log_det(&c1))).max(0.0))
}

/// g² E_{p¹}‖∇log p¹ − ∇log p²‖² for Gaussian marginals.
fn relative_fisher(
    m1: &DVector<f64>,
    s1: &DMatrix<f64>,
    m2: &DVector<f64>,
    s2: &DMatrix<f64>,
    g2: f64,
) -> Result<f64, BridgeError> {
    let p1 = chol(s1.clone())?.inverse();
    let p2 = chol(s2.clone())?.inverse();
    let k = &p2 - &p1;
    let c = &p1 * m1 - &p2 * m2;
    let shift = &k * m1 + c;
    let spread = (&k * s1 * k.transpose()).trace();
    Ok(g2 * (spread + shift.norm_squared()))
}

/// Track how two Gaussians become indistinguishable under the forward map.
///
/// At the horizon both marginals collapse to the same point mass; the KL is
/// zero there and the information takes its limiting value
/// ‖m¹ − m²‖² / β_max.
pub fn kl_blending_diagnostic(
    p1: &GaussianParams,
    p2: &GaussianParams,
    schedule: &Schedule,
    time_grid: &[f64],
) -> Result<BlendingCurve, BridgeError> {
    if p1.dim() != p2.dim() {
        return Err(BridgeError::DimensionMismatch {
            expected: p1.dim(),
            got: p2.dim(),
        });
    }
    if time_grid.is_empty()
        || time_grid.iter().any(|t| !(0.0..=1.0).contains(t))
        || time_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(BridgeError::InvalidSchedule("time grid must increase within [0, 1]".into()));
    }
    let mut kl = Vec::with_capacity(time_grid.len());
    let mut rfi = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        if t >= 1.0 {
            kl.push(0.0);
            rfi.push((&p1.mean - &p2.mean).norm_squared() / schedule.beta_max());
            continue;
        }
        let (a, b) = (schedule.alpha(t), schedule.beta(t));
        let (m1, s1) = p1.marginal(a, b);
        let (m2, s2) = p2.marginal(a, b);
        kl.push(gaussian_kl(&m1, &s1, &m2, &s2)?);
        rfi.push(relative_fisher(&m1, &s1, &m2, &s2, schedule.diffusion_sq(t))?);
    }
    let mut residual = Vec::with_capacity(time_grid.len());
    let mut integral = 0.0;
    for i in 0..time_grid.len() {
        if i > 0 {
            integral += 0.5 * (rfi[i] + rfi[i - 1]) * (time_grid[i] - time_grid[i - 1]);
        }
        residual.push(kl[i] - kl[0] + 0.5 * integral);
    }
    Ok(BlendingCurve {
        t: time_grid.to_vec(),
        kl,
        rfi,
        residual,
    })
}

/// `n` evenly spaced points covering [0, 1].
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}
