use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResponseBias {
    pub hit_rate: f64,
    pub false_alarm_rate: f64,
    /// Whether the log-linear correction was applied.
    pub corrected: bool,
    pub c: f64,
    pub z: f64,
    pub p_two_sided: f64,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Criterion c = −(z(H) + z(F)) / 2 and a Z-test of c = 0.
///
/// When either rate is 0 or 1, 0.5 is added to all four cells. The variance
/// of each z-score uses the delta method, H(1 − H) / (N φ(z_H)²).
pub fn response_bias_c(
    hits: u64,
    misses: u64,
    false_alarms: u64,
    correct_rejections: u64,
) -> Result<ResponseBias, StatsError> {
    if hits + misses == 0 || false_alarms + correct_rejections == 0 {
        return Err(StatsError::InvalidInput("need both signal and noise trials".into()));
    }
    let raw_h = hits as f64 / (hits + misses) as f64;
    let raw_f = false_alarms as f64 / (false_alarms + correct_rejections) as f64;
    let extreme = |r: f64| r == 0.0 || r == 1.0;
    let corrected = extreme(raw_h) || extreme(raw_f);
    let add = if corrected { 0.5 } else { 0.0 };
    let (h, m, f, cr) = (
        hits as f64 + add,
        misses as f64 + add,
        false_alarms as f64 + add,
        correct_rejections as f64 + add,
    );
    let (n_signal, n_noise) = (h + m, f + cr);
    let (hr, fr) = (h / n_signal, f / n_noise);
    let norm = std_normal();
    let (zh, zf) = (norm.inverse_cdf(hr), norm.inverse_cdf(fr));
    let c = -(zh + zf) / 2.0;
    let var_z = |rate: f64, z: f64, n: f64| rate * (1.0 - rate) / (n * norm.pdf(z).powi(2));
    let var_c = 0.25 * (var_z(hr, zh, n_signal) + var_z(fr, zf, n_noise));
    let z = c / var_c.sqrt();
    Ok(ResponseBias {
        hit_rate: hr,
        false_alarm_rate: fr,
        corrected,
        c,
        z,
        p_two_sided: 2.0 * norm.cdf(-z.abs()),
    })
}
