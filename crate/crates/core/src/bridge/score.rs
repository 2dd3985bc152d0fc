use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::BridgeError;
use crate::volume::{RegionMask, VolumeGrid};

/// Largest editable region the dense Gaussian score accepts.
pub const GAUSSIAN_MAX_DIM: usize = 64;

/// What the sampler hands a score model at each step.
#[derive(Clone, Copy, Debug)]
pub struct ScoreQuery<'a> {
    /// The volume being edited; editable voxels hold the current state in f32.
    pub context: &'a VolumeGrid,
    /// Linear indices of the editable voxels, ascending.
    pub editable: &'a [usize],
    /// Current editable-region state, aligned with `editable`.
    pub state: &'a [f64],
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// ∇ log p_t on the editable region.
pub trait ScoreFunction: Send + Sync {
    fn score(&self, query: &ScoreQuery<'_>) -> Result<Vec<f64>, String>;
}

/// Independent per-voxel Gaussian prior N(mean, var).
#[derive(Clone, Debug, PartialEq)]
pub struct IidGaussianScore {
    pub mean: f64,
    pub var: f64,
}

impl IidGaussianScore {
    pub fn new(mean: f64, var: f64) -> Result<Self, BridgeError> {
        if !(mean.is_finite() && var.is_finite() && var > 0.0) {
            return Err(BridgeError::NotPositiveDefinite);
        }
        Ok(Self { mean, var })
    }
}

impl ScoreFunction for IidGaussianScore {
    fn score(&self, q: &ScoreQuery<'_>) -> Result<Vec<f64>, String> {
        let denom = q.alpha * q.alpha * self.var + q.beta;
        Ok(q.state.iter().map(|x| -(x - q.alpha * self.mean) / denom).collect())
    }
}

/// Exact score of a correlated Gaussian prior over the editable region.
#[derive(Clone, Debug)]
pub struct GaussianScore {
    mean: DVector<f64>,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
}

impl GaussianScore {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, BridgeError> {
        let d = mean.len();
        if d == 0 || d > GAUSSIAN_MAX_DIM {
            return Err(BridgeError::PriorSize(d));
        }
        if cov.shape() != (d, d) {
            return Err(BridgeError::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        let tol = 1e-12 * cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > tol {
            return Err(BridgeError::NotPositiveDefinite);
        }
        if cov.clone().cholesky().is_none() {
            return Err(BridgeError::NotPositiveDefinite);
        }
        let eig = SymmetricEigen::new(cov);
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(BridgeError::NotPositiveDefinite);
        }
        Ok(Self {
            mean,
            eigvals: eig.eigenvalues,
            eigvecs: eig.eigenvectors,
        })
    }

    /// Condition a joint prior over every voxel of `context` on the values
    /// outside `mask`, keeping the editable-region marginal.
    pub fn conditioned(
        joint_mean: &DVector<f64>,
        joint_cov: &DMatrix<f64>,
        mask: &RegionMask,
        context: &VolumeGrid,
    ) -> Result<Self, BridgeError> {
        let n = context.len();
        if joint_mean.len() != n || joint_cov.shape() != (n, n) {
            return Err(BridgeError::DimensionMismatch {
                expected: n,
                got: joint_mean.len(),
            });
        }
        let e = mask.indices();
        let p = mask.complement().indices();
        let sub = |rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |r, c| joint_cov[(rows[r], cols[c])])
        };
        let mu_e = DVector::from_fn(e.len(), |r, _| joint_mean[e[r]]);
        if p.is_empty() {
            return Self::new(mu_e, sub(&e, &e));
        }
        let resid = DVector::from_fn(p.len(), |r, _| context.voxels()[p[r]] as f64 - joint_mean[p[r]]);
        let chol = sub(&p, &p).cholesky().ok_or(BridgeError::NotPositiveDefinite)?;
        let s_ep = sub(&e, &p);
        let gain = chol.solve(&s_ep.transpose()).transpose();
        let mean = mu_e + &gain * resid;
        let cov = sub(&e, &e) - &gain * s_ep.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        Self::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.eigvecs * DMatrix::from_diagonal(&self.eigvals) * self.eigvecs.transpose()
    }

    /// −(α²C + βI)⁻¹ (x − αμ).
    pub fn score_at(&self, x: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
        let r = DVector::from_fn(self.dim(), |i, _| x[i] - alpha * self.mean[i]);
        let mut proj = self.eigvecs.tr_mul(&r);
        for (p, l) in proj.iter_mut().zip(self.eigvals.iter()) {
            *p /= alpha * alpha * l + beta;
        }
        (&self.eigvecs * proj).iter().map(|v| -v).collect()
    }
}

impl ScoreFunction for GaussianScore {
    fn score(&self, q: &ScoreQuery<'_>) -> Result<Vec<f64>, String> {
        if q.state.len() != self.dim() {
            return Err(format!(
                "prior has {} voxels, editable region has {}",
                self.dim(),
                q.state.len()
            ));
        }
        Ok(self.score_at(q.state, q.alpha, q.beta))
    }
}
