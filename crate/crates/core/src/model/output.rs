use serde::{Deserialize, Serialize};

use super::ModelError;

pub const N_RISKS: usize = 7;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Base logit, cumulative risks y₀..y₆ and the hazards between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskOutput {
    pub base_logit: f64,
    pub risks: [f64; N_RISKS],
    pub hazards: [f64; N_RISKS - 1],
}

/// The body exchanged by the HTTP and stdio transports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub base_logit: f64,
    pub risks: Vec<f64>,
}

impl RiskOutput {
    /// Validate a logit and risk vector, deriving the hazards.
    pub fn new(base_logit: f64, risks: [f64; N_RISKS]) -> Result<Self, ModelError> {
        if !base_logit.is_finite() {
            return Err(ModelError::Protocol("non-finite base logit".into()));
        }
        if risks.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(ModelError::Protocol(format!("risk outside [0, 1]: {risks:?}")));
        }
        if risks.windows(2).any(|w| w[1] < w[0]) {
            return Err(ModelError::Protocol(format!("risks decrease: {risks:?}")));
        }
        if (sigmoid(base_logit) - risks[0]).abs() > 1e-9 {
            return Err(ModelError::Protocol(format!(
                "base risk {} disagrees with logit {base_logit}",
                risks[0]
            )));
        }
        let hazards = std::array::from_fn(|j| risks[j + 1] - risks[j]);
        Ok(Self {
            base_logit,
            risks,
            hazards,
        })
    }

    pub fn from_wire(w: &WireResponse) -> Result<Self, ModelError> {
        let risks: [f64; N_RISKS] = w.risks.as_slice().try_into().map_err(|_| {
            ModelError::Protocol(format!("expected {N_RISKS} risks, got {}", w.risks.len()))
        })?;
        Self::new(w.base_logit, risks)
    }

    pub fn to_wire(&self) -> WireResponse {
        WireResponse {
            base_logit: self.base_logit,
            risks: self.risks.to_vec(),
        }
    }
}

/// Pearson correlation matrix of the seven risk columns.
pub fn risk_correlation(outputs: &[RiskOutput]) -> Result<[[f64; N_RISKS]; N_RISKS], ModelError> {
    if outputs.len() < 3 {
        return Err(ModelError::TooFewOutputs(outputs.len()));
    }
    let n = outputs.len() as f64;
    let mean: [f64; N_RISKS] = std::array::from_fn(|c| outputs.iter().map(|o| o.risks[c]).sum::<f64>() / n);
    let mut cov = [[0.0; N_RISKS]; N_RISKS];
    for o in outputs {
        for a in 0..N_RISKS {
            for b in 0..N_RISKS {
                cov[a][b] += (o.risks[a] - mean[a]) * (o.risks[b] - mean[b]);
            }
        }
    }
    if let Some(c) = (0..N_RISKS).find(|&c| cov[c][c] <= 0.0) {
        return Err(ModelError::UndefinedCorrelation(c));
    }
    Ok(std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            if a == b {
                1.0
            } else {
                cov[a][b] / (cov[a][a] * cov[b][b]).sqrt()
            }
        })
    }))
}
