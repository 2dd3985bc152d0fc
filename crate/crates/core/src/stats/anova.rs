use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnovaRow {
    pub ss: f64,
    pub df: usize,
    pub ms: f64,
    /// Absent on the residual row.
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnovaTable {
    pub factor_a: AnovaRow,
    pub factor_b: AnovaRow,
    pub interaction: AnovaRow,
    pub residual: AnovaRow,
    pub ss_total: f64,
    pub levels_a: usize,
    pub levels_b: usize,
    pub replicates: usize,
}

fn effect_row(ss: f64, df: usize, ms_res: f64, df_res: usize) -> AnovaRow {
    let ms = ss / df as f64;
    let (f, p) = if ss <= 0.0 {
        (0.0, 1.0)
    } else if ms_res <= 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ms / ms_res;
        let dist = FisherSnedecor::new(df as f64, df_res as f64).expect("positive degrees of freedom");
        (f, dist.sf(f))
    };
    AnovaRow {
        ss,
        df,
        ms,
        f: Some(f),
        p: Some(p),
    }
}

/// Levels in sorted order.
fn level_index<T: Ord + Clone>(labels: &[T]) -> BTreeMap<T, usize> {
    let levels: BTreeSet<T> = labels.iter().cloned().collect();
    levels.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
}

/// Balanced two-way ANOVA with interaction.
///
/// `factor_a[i]` and `factor_b[i]` label observation `i`; every cell must
/// hold the same number (≥ 2) of replicates.
pub fn two_way_anova<A: Ord + Clone, B: Ord + Clone>(
    values: &[f64],
    factor_a: &[A],
    factor_b: &[B],
) -> Result<AnovaTable, StatsError> {
    if values.len() != factor_a.len() || values.len() != factor_b.len() {
        return Err(StatsError::InvalidInput("values and factors differ in length".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite observation".into()));
    }
    let ia = level_index(factor_a);
    let ib = level_index(factor_b);
    let (a, b) = (ia.len(), ib.len());
    if a < 2 || b < 2 {
        return Err(StatsError::InvalidInput("each factor needs at least two levels".into()));
    }
    let mut cells = vec![Vec::new(); a * b];
    for ((v, fa), fb) in values.iter().zip(factor_a).zip(factor_b) {
        cells[ia[fa] * b + ib[fb]].push(*v);
    }
    let r = cells[0].len();
    if cells.iter().any(|c| c.len() != r) {
        return Err(StatsError::UnbalancedDesign);
    }
    if r < 2 {
        return Err(StatsError::InvalidInput("need at least two replicates per cell".into()));
    }
    let n = values.len() as f64;
    let grand = values.iter().sum::<f64>() / n;
    let cell_mean: Vec<f64> = cells.iter().map(|c| c.iter().sum::<f64>() / r as f64).collect();
    let mean_a: Vec<f64> = (0..a).map(|i| (0..b).map(|j| cell_mean[i * b + j]).sum::<f64>() / b as f64).collect();
    let mean_b: Vec<f64> = (0..b).map(|j| (0..a).map(|i| cell_mean[i * b + j]).sum::<f64>() / a as f64).collect();
    let rf = r as f64;
    let ss_a = b as f64 * rf * mean_a.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = a as f64 * rf * mean_b.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    for i in 0..a {
        for j in 0..b {
            ss_ab += (cell_mean[i * b + j] - mean_a[i] - mean_b[j] + grand).powi(2);
        }
    }
    ss_ab *= rf;
    let ss_res: f64 = cells
        .iter()
        .zip(&cell_mean)
        .map(|(c, m)| c.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let ss_total: f64 = values.iter().map(|v| (v - grand).powi(2)).sum();
    let df_res = a * b * (r - 1);
    let ms_res = ss_res / df_res as f64;
    Ok(AnovaTable {
        factor_a: effect_row(ss_a, a - 1, ms_res, df_res),
        factor_b: effect_row(ss_b, b - 1, ms_res, df_res),
        interaction: effect_row(ss_ab, (a - 1) * (b - 1), ms_res, df_res),
        residual: AnovaRow {
            ss: ss_res,
            df: df_res,
            ms: ms_res,
            f: None,
            p: None,
        },
        ss_total,
        levels_a: a,
        levels_b: b,
        replicates: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(a: usize, b: usize, r: usize, f: impl Fn(usize, usize, usize) -> f64) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
        let mut v = Vec::new();
        let mut fa = Vec::new();
        let mut fb = Vec::new();
        for i in 0..a {
            for j in 0..b {
                for k in 0..r {
                    v.push(f(i, j, k));
                    fa.push(i);
                    fb.push(j);
                }
            }
        }
        (v, fa, fb)
    }

    #[test]
    fn constant_data() {
        let (v, fa, fb) = design(2, 3, 2, |_, _, _| 4.0);
        let t = two_way_anova(&v, &fa, &fb).unwrap();
        for row in [&t.factor_a, &t.factor_b, &t.interaction] {
            assert_eq!(row.f, Some(0.0));
            assert_eq!(row.p, Some(1.0));
        }
    }

    #[test]
    fn additive_cells_have_no_interaction() {
        let (v, fa, fb) = design(3, 4, 3, |i, j, k| i as f64 * 2.0 - j as f64 + [0.1, -0.2, 0.1][k]);
        let t = two_way_anova(&v, &fa, &fb).unwrap();
        assert!(t.interaction.ss < 1e-20);
        assert_eq!(t.factor_a.df + t.factor_b.df + t.interaction.df + t.residual.df, v.len() - 1);
        let sum = t.factor_a.ss + t.factor_b.ss + t.interaction.ss + t.residual.ss;
        assert!((sum - t.ss_total).abs() < 1e-9);
    }

    #[test]
    fn perfect_fit_gives_infinite_f() {
        let (v, fa, fb) = design(2, 2, 2, |i, _, _| i as f64);
        let t = two_way_anova(&v, &fa, &fb).unwrap();
        assert_eq!(t.factor_a.f, Some(f64::INFINITY));
        assert_eq!(t.factor_a.p, Some(0.0));
    }

    #[test]
    fn unbalanced_rejected() {
        let (mut v, mut fa, mut fb) = design(2, 2, 2, |i, j, k| (i + j + k) as f64);
        v.pop();
        fa.pop();
        fb.pop();
        assert!(matches!(two_way_anova(&v, &fa, &fb), Err(StatsError::UnbalancedDesign)));
    }
}
