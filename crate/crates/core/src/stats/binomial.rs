use serde::Serialize;
use statrs::distribution::{Binomial, Discrete};
use statrs::function::beta::beta_reg;

use super::StatsError;

/// Relative slack when comparing probabilities to pmf(k).
const PMF_TIE_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinomialTestResult {
    pub k: u64,
    pub n: u64,
    pub p0: f64,
    pub estimate: f64,
    pub p_two_sided: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Two-sided exact test summing every outcome no more likely than `k`,
/// with a 95% Clopper–Pearson interval.
pub fn exact_binomial_test(k: u64, n: u64, p0: f64) -> Result<BinomialTestResult, StatsError> {
    if n == 0 || k > n {
        return Err(StatsError::InvalidInput(format!("need 0 <= k <= n, n > 0 (k={k}, n={n})")));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(StatsError::InvalidInput(format!("p0 = {p0} outside (0, 1)")));
    }
    let dist = Binomial::new(p0, n).map_err(|e| StatsError::InvalidInput(e.to_string()))?;
    let cutoff = dist.pmf(k) * (1.0 + PMF_TIE_TOL);
    let p: f64 = (0..=n).map(|i| dist.pmf(i)).filter(|&q| q <= cutoff).sum();
    let (ci_low, ci_high) = clopper_pearson(k, n, 0.05);
    Ok(BinomialTestResult {
        k,
        n,
        p0,
        estimate: k as f64 / n as f64,
        p_two_sided: p.min(1.0),
        ci_low,
        ci_high,
    })
}

/// Solve `f(x) = target` for increasing `f` on [0, 1] by bisection.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Equal-tailed exact interval for a binomial proportion.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    let (kf, nf) = (k as f64, n as f64);
    let low = if k == 0 {
        0.0
    } else {
        bisect_increasing(|x| beta_reg(kf, nf - kf + 1.0, x), alpha / 2.0)
    };
    let high = if k == n {
        1.0
    } else {
        bisect_increasing(|x| beta_reg(kf + 1.0, nf - kf, x), 1.0 - alpha / 2.0)
    };
    (low, high)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_and_extreme() {
        assert!((exact_binomial_test(10, 20, 0.5).unwrap().p_two_sided - 1.0).abs() < 1e-12);
        let r = exact_binomial_test(12, 12, 0.5).unwrap();
        assert!((r.p_two_sided - 2.0 * 0.5f64.powi(12)).abs() < 1e-15);
        assert_eq!(r.ci_high, 1.0);
        assert!(exact_binomial_test(3, 2, 0.5).is_err());
        assert!(exact_binomial_test(1, 2, 1.0).is_err());
    }

    #[test]
    fn interval_tails_hit_alpha() {
        let (lo, hi) = clopper_pearson(7, 30, 0.05);
        // P(X >= 7 | lo) = 0.025 and P(X <= 7 | hi) = 0.025.
        let upper_tail = |p: f64| {
            let d = Binomial::new(p, 30).unwrap();
            (7..=30).map(|i| d.pmf(i)).sum::<f64>()
        };
        let lower_tail = |p: f64| {
            let d = Binomial::new(p, 30).unwrap();
            (0..=7).map(|i| d.pmf(i)).sum::<f64>()
        };
        assert!((upper_tail(lo) - 0.025).abs() < 1e-10);
        assert!((lower_tail(hi) - 0.025).abs() < 1e-10);
    }

    #[test]
    fn symmetric_under_reflection() {
        for k in 0..=15 {
            let a = exact_binomial_test(k, 15, 0.5).unwrap().p_two_sided;
            let b = exact_binomial_test(15 - k, 15, 0.5).unwrap().p_two_sided;
            assert!((a - b).abs() < 1e-14);
        }
    }
}
