use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    /// NaN when there are no residual degrees of freedom.
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub df_resid: usize,
}

/// Ordinary least squares via Householder QR.
///
/// `design` is row-major; include a column of ones for an intercept.
/// R² is computed against the mean of `y`.
pub fn ols_fit(design: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, StatsError> {
    let n = design.len();
    if n == 0 || n != y.len() {
        return Err(StatsError::InvalidInput("design rows and y differ in length".into()));
    }
    let p = design[0].len();
    if p == 0 || design.iter().any(|r| r.len() != p) {
        return Err(StatsError::InvalidInput("ragged design matrix".into()));
    }
    if n < p {
        return Err(StatsError::SingularDesign);
    }
    if design.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite input".into()));
    }
    let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().amax().max(f64::MIN_POSITIVE);
    if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * scale * n as f64) {
        return Err(StatsError::SingularDesign);
    }
    let qty = qr.q().tr_mul(&yv);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::SingularDesign)?;
    let resid = &yv - &x * &beta;
    let ssr = resid.norm_squared();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else if ssr == 0.0 { 1.0 } else { 0.0 };
    let df_resid = n - p;
    let (std_errors, t_stats, p_values) = if df_resid == 0 {
        (vec![f64::NAN; p], vec![f64::NAN; p], vec![f64::NAN; p])
    } else {
        let sigma2 = ssr / df_resid as f64;
        let r_inv = r
            .clone()
            .try_inverse()
            .ok_or(StatsError::SingularDesign)?;
        // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ; its diagonal is the row norms of R⁻¹.
        let se: Vec<f64> = (0..p).map(|i| (sigma2 * r_inv.row(i).norm_squared()).sqrt()).collect();
        let t: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
        let dist = StudentsT::new(0.0, 1.0, df_resid as f64).expect("positive df");
        let pv = t
            .iter()
            .map(|t| if t.is_nan() { f64::NAN } else { 2.0 * dist.sf(t.abs()) })
            .collect();
        (se, t, pv)
    };
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_stats,
        p_values,
        r_squared,
        residuals: resid.iter().copied().collect(),
        df_resid,
    })
}
