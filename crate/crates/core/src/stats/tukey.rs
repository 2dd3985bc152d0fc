use serde::Serialize;
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};
use statrs::function::erf::erfc;

use super::StatsError;

/// Absolute tolerance of the outer studentized-range quadrature.
pub const STUDENTIZED_RANGE_TOL: f64 = 1e-6;
const Z_SPAN: f64 = 8.5;
const S_TAIL: f64 = 1e-12;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn big_phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson over `panels` equal sub-intervals.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_rec(f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// P(range of k standard normals ≤ w).
fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let f = |z: f64| kf * phi(z) * (big_phi(z) - big_phi(z - w)).max(0.0).powi(k as i32 - 1);
    integrate(&f, -Z_SPAN, Z_SPAN + w.min(Z_SPAN), STUDENTIZED_RANGE_TOL * 0.1, 16).clamp(0.0, 1.0)
}

/// CDF of the studentized range for `k` means and `df` error degrees of
/// freedom, integrating the normal-range CDF over the distribution of s.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if !q.is_finite() {
        return 1.0;
    }
    let chi = ChiSquared::new(df).expect("positive degrees of freedom");
    let lo = (chi.inverse_cdf(S_TAIL) / df).sqrt();
    let hi = (chi.inverse_cdf(1.0 - S_TAIL) / df).sqrt();
    // s = sqrt(X / df), X ~ χ²(df): density f_X(df s²) · 2 df s.
    let f = |s: f64| {
        let dens = chi.pdf(df * s * s) * 2.0 * df * s;
        if dens == 0.0 {
            0.0
        } else {
            dens * range_cdf(q * s, k)
        }
    };
    integrate(&f, lo, hi, STUDENTIZED_RANGE_TOL, 8).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TukeyPair {
    pub group_a: usize,
    pub group_b: usize,
    pub mean_diff: f64,
    pub q: f64,
    pub adjusted_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TukeyResult {
    pub pairs: Vec<TukeyPair>,
    pub mse: f64,
    pub df: usize,
}

/// All pairwise comparisons (Tukey–Kramer for unequal sizes).
pub fn tukey_hsd(groups: &[Vec<f64>]) -> Result<TukeyResult, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::InvalidInput("need at least two groups".into()));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(StatsError::InvalidInput("every group needs two observations".into()));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite observation".into()));
    }
    let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let n: usize = groups.iter().map(Vec::len).sum();
    let df = n - k;
    let sse: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let mse = sse / df as f64;
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let diff = means[a] - means[b];
            let se = (mse / 2.0 * (1.0 / groups[a].len() as f64 + 1.0 / groups[b].len() as f64)).sqrt();
            let q = if se > 0.0 {
                diff.abs() / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            pairs.push(TukeyPair {
                group_a: a,
                group_b: b,
                mean_diff: diff,
                q,
                adjusted_p: (1.0 - studentized_range_cdf(q, k, df as f64)).clamp(0.0, 1.0),
            });
        }
    }
    Ok(TukeyResult { pairs, mse, df })
}
