use serde::{Deserialize, Serialize};

use super::output::{sigmoid, RiskOutput, N_RISKS};
use super::ModelError;
use crate::volume::{sphere_mask, Coord, NoduleSpec, RegionMask, VolumeGrid};

pub const DEFAULT_DETECT_THRESHOLD_HU: f64 = -300.0;

/// A spherical detection site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToySite {
    pub center: Coord,
    pub radius_mm: f64,
}

/// An intercept, main effects and pairwise effects over binary site
/// indicators, with a fixed monotone hazard scheme on top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyLmpiModelSpec {
    pub sites: Vec<ToySite>,
    pub beta0: f64,
    pub beta_main: Vec<f64>,
    /// Symmetric, zero-diagonal; only `i < j` entries are used.
    pub beta_pair: Vec<Vec<f64>>,
    #[serde(default = "default_threshold")]
    pub detect_threshold_hu: f64,
    #[serde(default = "default_hazards")]
    pub hazard_weights: [f64; N_RISKS - 1],
}

fn default_threshold() -> f64 {
    DEFAULT_DETECT_THRESHOLD_HU
}

fn default_hazards() -> [f64; N_RISKS - 1] {
    [0.05, 0.04, 0.03, 0.03, 0.02, 0.02]
}

impl ToyLmpiModelSpec {
    /// A spec with no pairwise terms and default hazards.
    pub fn additive(sites: Vec<ToySite>, beta0: f64, beta_main: Vec<f64>) -> Self {
        let n = sites.len();
        Self {
            sites,
            beta0,
            beta_main,
            beta_pair: vec![vec![0.0; n]; n],
            detect_threshold_hu: DEFAULT_DETECT_THRESHOLD_HU,
            hazard_weights: default_hazards(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.sites.len();
        let bad = |m: &str| Err(ModelError::InvalidSpec(m.into()));
        if self.beta_main.len() != n {
            return bad("beta_main length differs from site count");
        }
        if self.beta_pair.len() != n || self.beta_pair.iter().any(|r| r.len() != n) {
            return bad("beta_pair must be square over the sites");
        }
        for i in 0..n {
            if self.beta_pair[i][i] != 0.0 {
                return bad("beta_pair diagonal must be zero");
            }
            for j in 0..i {
                if self.beta_pair[i][j] != self.beta_pair[j][i] {
                    return bad("beta_pair must be symmetric");
                }
            }
        }
        let finite = std::iter::once(self.beta0)
            .chain(self.beta_main.iter().copied())
            .chain(self.beta_pair.iter().flatten().copied())
            .chain(std::iter::once(self.detect_threshold_hu))
            .all(f64::is_finite);
        if !finite {
            return bad("non-finite coefficient");
        }
        if self.hazard_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("hazard weights must be non-negative");
        }
        if self.sites.iter().any(|s| !(s.radius_mm.is_finite() && s.radius_mm >= 0.0)) {
            return bad("site radius must be non-negative");
        }
        Ok(())
    }

    /// Site masks on a grid; they must be pairwise disjoint.
    pub fn site_masks(&self, dims: [usize; 3], spacing_mm: [f64; 3]) -> Result<Vec<RegionMask>, ModelError> {
        let masks = self
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let spec = NoduleSpec {
                    id: format!("site-{i}"),
                    center: s.center,
                    radius_mm: s.radius_mm,
                    malignancy: crate::volume::Malignancy::Unknown,
                };
                sphere_mask(dims, spacing_mm, &spec)
            })
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..masks.len() {
            for j in 0..i {
                if masks[i].intersects(&masks[j]) {
                    return Err(ModelError::InvalidSpec(format!("sites {j} and {i} overlap")));
                }
            }
        }
        Ok(masks)
    }

    /// Logit for a given activation pattern (bit i = site i active).
    pub fn logit_for_pattern(&self, active: u32) -> f64 {
        let on = |i: usize| active >> i & 1 == 1;
        let n = self.sites.len();
        let mut logit = self.beta0;
        for i in (0..n).filter(|&i| on(i)) {
            logit += self.beta_main[i];
            for j in (i + 1..n).filter(|&j| on(j)) {
                logit += self.beta_pair[i][j];
            }
        }
        logit
    }

    /// Cumulative risks from the base logit: each hazard is a fixed multiple
    /// of the base risk, capped so the last risk stays at most 1.
    pub fn risks_for_logit(&self, logit: f64) -> [f64; N_RISKS] {
        let y0 = sigmoid(logit);
        let mut risks = [y0; N_RISKS];
        for j in 1..N_RISKS {
            risks[j] = (risks[j - 1] + self.hazard_weights[j - 1] * y0).min(1.0);
        }
        risks
    }
}

/// Indicator pattern: a site is on when its mean intensity exceeds the
/// detection threshold.
pub fn toy_activation(spec: &ToyLmpiModelSpec, masks: &[RegionMask], volume: &VolumeGrid) -> u32 {
    let mut active = 0u32;
    for (i, m) in masks.iter().enumerate() {
        let idx = m.indices();
        if idx.is_empty() {
            continue;
        }
        let mean = idx.iter().map(|&v| volume.voxels()[v] as f64).sum::<f64>() / idx.len() as f64;
        if mean > spec.detect_threshold_hu {
            active |= 1 << i;
        }
    }
    active
}

pub fn toy_model_eval(spec: &ToyLmpiModelSpec, volume: &VolumeGrid) -> Result<RiskOutput, ModelError> {
    spec.validate()?;
    let masks = spec.site_masks(volume.dims(), volume.spacing_mm())?;
    let logit = spec.logit_for_pattern(toy_activation(spec, &masks, volume));
    RiskOutput::new(logit, spec.risks_for_logit(logit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ToyLmpiModelSpec {
        let sites = vec![
            ToySite { center: [3, 3, 3], radius_mm: 1.5 },
            ToySite { center: [10, 3, 3], radius_mm: 2.0 },
            ToySite { center: [5, 10, 8], radius_mm: 1.0 },
        ];
        let mut s = ToyLmpiModelSpec::additive(sites, -2.0, vec![0.7, 1.3, -0.4]);
        s.beta_pair[0][1] = 0.25;
        s.beta_pair[1][0] = 0.25;
        s.beta_pair[1][2] = -0.6;
        s.beta_pair[2][1] = -0.6;
        s
    }

    fn volume_with(spec: &ToyLmpiModelSpec, active: u32) -> VolumeGrid {
        let mut v = VolumeGrid::filled([14, 14, 12], [1.0; 3], -800.0).unwrap();
        for (i, m) in spec.site_masks(v.dims(), v.spacing_mm()).unwrap().iter().enumerate() {
            if active >> i & 1 == 1 {
                for idx in m.indices() {
                    v.voxels_mut()[idx] = -50.0;
                }
            }
        }
        v
    }

    #[test]
    fn exhaustive_patterns() {
        let s = spec();
        for p in 0..8u32 {
            let out = toy_model_eval(&s, &volume_with(&s, p)).unwrap();
            let b = |i: usize| (p >> i & 1) as f64;
            let direct = -2.0 + 0.7 * b(0) + 1.3 * b(1) - 0.4 * b(2) + 0.25 * b(0) * b(1) - 0.6 * b(1) * b(2);
            assert!((out.base_logit - direct).abs() < 1e-12, "pattern {p}");
        }
        assert_eq!(toy_model_eval(&s, &volume_with(&s, 0)).unwrap().base_logit, -2.0);
    }

    #[test]
    fn hazards_cap_at_one() {
        let mut s = spec();
        s.hazard_weights = [0.5; 6];
        let r = s.risks_for_logit(3.0);
        assert_eq!(r[6], 1.0);
        assert!(RiskOutput::new(3.0, r).is_ok());
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec();
        s.beta_pair[0][1] = 9.0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.hazard_weights[2] = -0.1;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.sites[1].center = [4, 3, 3];
        assert!(toy_model_eval(&s, &volume_with(&spec(), 0)).is_err());
    }
}
