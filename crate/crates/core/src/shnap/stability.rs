use serde::Serialize;

use super::explain::{shnap_runs, AuditCase, ShnapExplanation};
use super::removal::{FillRemover, NaiveBaseline, RegionRemover};
use super::ShnapError;
use crate::coalition::n_shapley;
use crate::model::{sigmoid, ModelHandle};

/// Spread of one coefficient across explanations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientStd {
    /// Players in the term, empty for the baseline.
    pub players: Vec<usize>,
    pub logit_std: f64,
    pub probability_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub explanations: usize,
    pub coefficients: Vec<CoefficientStd>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl StabilityReport {
    pub fn median_logit_std(&self) -> f64 {
        median(self.coefficients.iter().map(|c| c.logit_std).collect())
    }

    pub fn median_probability_std(&self) -> f64 {
        median(self.coefficients.iter().map(|c| c.probability_std).collect())
    }
}

fn sample_std(columns: &[Vec<f64>]) -> Vec<f64> {
    let k = columns[0].len();
    let n = columns.len() as f64;
    (0..k)
        .map(|c| {
            let mean = columns.iter().map(|r| r[c]).sum::<f64>() / n;
            (columns.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect()
}

/// Sample standard deviation of every coefficient across explanations of
/// the same case, in logit space and after mapping coalition values
/// through the logistic function.
pub fn stability_report(explanations: &[ShnapExplanation]) -> Result<StabilityReport, ShnapError> {
    if explanations.len() < 2 {
        return Err(ShnapError::Mismatch(format!(
            "need at least 2 explanations, got {}",
            explanations.len()
        )));
    }
    let first = &explanations[0];
    let n = first.attribution.n_players();
    let order = first.attribution.order();
    for e in &explanations[1..] {
        if e.attribution.n_players() != n || e.attribution.order() != order {
            return Err(ShnapError::Mismatch(format!(
                "{} players of order {} vs {n} of order {order}",
                e.attribution.n_players(),
                e.attribution.order()
            )));
        }
        if e.region_labels != first.region_labels {
            return Err(ShnapError::Mismatch("region labels differ".into()));
        }
    }
    let logit: Vec<Vec<f64>> = explanations.iter().map(|e| e.attribution.coefficients().to_vec()).collect();
    let prob: Vec<Vec<f64>> = explanations
        .iter()
        .map(|e| Ok::<_, ShnapError>(n_shapley(&e.game.map(sigmoid)?, order)?.coefficients().to_vec()))
        .collect::<Result<_, _>>()?;
    let (ls, ps) = (sample_std(&logit), sample_std(&prob));
    let coefficients = first
        .attribution
        .terms()
        .zip(ls.into_iter().zip(ps))
        .map(|((s, _), (logit_std, probability_std))| CoefficientStd {
            players: (0..n).filter(|&i| s >> i & 1 == 1).collect(),
            logit_std,
            probability_std,
        })
        .collect();
    Ok(StabilityReport {
        explanations: explanations.len(),
        coefficients,
    })
}

/// One explanation per naive intensity baseline, in `NaiveBaseline::ALL`
/// order.
pub fn naive_baseline_explanations(
    case: &AuditCase,
    model: &ModelHandle,
) -> Result<Vec<(NaiveBaseline, ShnapExplanation)>, ShnapError> {
    let union = case.union_mask();
    NaiveBaseline::ALL
        .iter()
        .map(|&b| {
            let remover = FillRemover(b.fill_value(case.scan(), &union));
            let runs = shnap_runs(case, model, &remover, 0, 1)?;
            Ok((b, ShnapExplanation::from_runs(case.labels(), &runs)?))
        })
        .collect()
}

/// Seeded runs of one remover set against the spread across naive baselines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityComparison {
    pub runs: StabilityReport,
    pub naive: StabilityReport,
}

impl StabilityComparison {
    /// Median naive std over median run std, in logit space.
    pub fn median_ratio(&self) -> f64 {
        self.naive.median_logit_std() / self.runs.median_logit_std()
    }
}

/// Explain `case` `runs` times with independent seeds and compare the
/// spread with the four naive baselines.
pub fn stability_protocol(
    case: &AuditCase,
    model: &ModelHandle,
    remover: &dyn RegionRemover,
    seed: u64,
    runs: usize,
) -> Result<StabilityComparison, ShnapError> {
    let labels = case.labels();
    let seeded = shnap_runs(case, model, remover, seed, runs)?
        .into_iter()
        .map(|r| ShnapExplanation::from_runs(labels.clone(), &[r]))
        .collect::<Result<Vec<_>, _>>()?;
    let naive: Vec<ShnapExplanation> = naive_baseline_explanations(case, model)?.into_iter().map(|(_, e)| e).collect();
    Ok(StabilityComparison {
        runs: stability_report(&seeded)?,
        naive: stability_report(&naive)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::CoalitionGame;
    use crate::shnap::explain::RunResult;
    use rand::{Rng, SeedableRng};

    fn explanation(values: Vec<f64>) -> ShnapExplanation {
        let n = values.len().trailing_zeros() as usize;
        let game = CoalitionGame::from_values(n, values).unwrap();
        let labels = (0..n).map(|i| format!("r{i}")).collect();
        ShnapExplanation::from_runs(labels, &[RunResult { run: 0, game }]).unwrap()
    }

    #[test]
    fn identical_runs_have_zero_std() {
        let e = explanation(vec![0.1, 0.4, -0.2, 0.9]);
        let r = stability_report(&[e.clone(), e]).unwrap();
        assert!(r.coefficients.iter().all(|c| c.logit_std == 0.0 && c.probability_std == 0.0));
    }

    #[test]
    fn two_point_std() {
        let d = 0.3;
        let a = explanation(vec![0.0, 1.0]);
        let b = explanation(vec![d, 1.0]);
        let r = stability_report(&[a, b]).unwrap();
        // φ_∅ moves by δ; φ_1 = v(1) − v(∅) moves by −δ.
        for c in &r.coefficients {
            assert!((c.logit_std - d / 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn two_pass_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let exps: Vec<ShnapExplanation> = (0..6)
            .map(|_| explanation((0..8).map(|_| rng.random_range(-2.0..2.0)).collect()))
            .collect();
        let r = stability_report(&exps).unwrap();
        for (k, c) in r.coefficients.iter().enumerate() {
            let xs: Vec<f64> = exps.iter().map(|e| e.attribution.coefficients()[k]).collect();
            let mean = xs.iter().sum::<f64>() / 6.0;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
            assert!((c.logit_std - var.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn structure_checks() {
        let a = explanation(vec![0.0, 1.0]);
        let b = explanation(vec![0.0, 1.0, 2.0, 3.0]);
        assert!(stability_report(std::slice::from_ref(&a)).is_err());
        assert!(stability_report(&[a, b]).is_err());
    }
}
