use serde::{Deserialize, Serialize};

use super::BridgeError;

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_BETA_MAX: f64 = 1.0;

/// α_t = 1 − t and β_t = β_max·t(1 − t) on t ∈ [0, 1], discretised on
/// `steps` uniform intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    steps: usize,
    beta_max: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self::new(DEFAULT_STEPS, DEFAULT_BETA_MAX).expect("default schedule is valid")
    }
}

impl Schedule {
    pub fn new(steps: usize, beta_max: f64) -> Result<Self, BridgeError> {
        if steps == 0 {
            return Err(BridgeError::InvalidSchedule("steps must be positive".into()));
        }
        if !(beta_max.is_finite() && beta_max > 0.0) {
            return Err(BridgeError::InvalidSchedule(format!("beta_max {beta_max}")));
        }
        let t = |i: usize| i as f64 / steps as f64;
        let mut alpha: Vec<f64> = (0..=steps).map(|i| 1.0 - t(i)).collect();
        let mut beta: Vec<f64> = (0..=steps).map(|i| beta_max * t(i) * (1.0 - t(i))).collect();
        alpha[0] = 1.0;
        alpha[steps] = 0.0;
        beta[0] = 0.0;
        beta[steps] = 0.0;
        Ok(Self {
            steps,
            beta_max,
            alpha,
            beta,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<(), BridgeError> {
        if index > self.steps {
            return Err(BridgeError::TimeOutOfRange {
                index,
                steps: self.steps,
            });
        }
        Ok(())
    }

    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 / self.steps as f64
    }

    /// Round a fraction of the horizon to the nearest step index.
    pub fn index_of(&self, fraction: f64) -> Result<usize, BridgeError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(BridgeError::InvalidSchedule(format!("fraction {fraction}")));
        }
        Ok((fraction * self.steps as f64).round() as usize)
    }

    pub fn alpha(&self, t: f64) -> f64 {
        1.0 - t
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta_max * t * (1.0 - t)
    }

    /// Drift coefficient α'/α of the forward SDE.
    pub fn drift(&self, t: f64) -> f64 {
        -1.0 / (1.0 - t)
    }

    /// Squared diffusion β' − 2β·α'/α, constant for this schedule.
    pub fn diffusion_sq(&self, _t: f64) -> f64 {
        self.beta_max
    }
}
