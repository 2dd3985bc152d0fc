use serde::Serialize;

use super::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdPick {
    /// Scores at or above this are called positive.
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// False when the target could not be met; the threshold is then the
    /// minimum score.
    pub reached: bool,
}

fn rates(scores: &[f64], labels: &[bool], threshold: f64) -> (f64, f64) {
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        if l {
            pos += 1;
            tp += (s >= threshold) as usize;
        } else {
            neg += 1;
            tn += (s < threshold) as usize;
        }
    }
    (tp as f64 / pos as f64, tn as f64 / neg as f64)
}

/// The largest threshold whose sensitivity reaches `target_sensitivity`.
pub fn pick_threshold(scores: &[f64], labels: &[bool], target_sensitivity: f64) -> Result<ThresholdPick, StatsError> {
    if scores.len() != labels.len() {
        return Err(StatsError::InvalidInput("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite score".into()));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(StatsError::InvalidInput("both classes must be present".into()));
    }
    if !(target_sensitivity > 0.0 && target_sensitivity <= 1.0) {
        return Err(StatsError::InvalidInput(format!("target {target_sensitivity} outside (0, 1]")));
    }
    let mut positives: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    positives.sort_by(|a, b| b.total_cmp(a));
    let n_pos = positives.len();
    // Smallest k with k / n_pos ≥ target.
    let k = (1..=n_pos).find(|&k| k as f64 >= target_sensitivity * n_pos as f64 - 1e-9 * n_pos as f64);
    let (threshold, reached) = match k {
        Some(k) => (positives[k - 1], true),
        None => (scores.iter().copied().fold(f64::INFINITY, f64::min), false),
    };
    let (sensitivity, specificity) = rates(scores, labels, threshold);
    Ok(ThresholdPick {
        threshold,
        sensitivity,
        specificity,
        reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_classes() {
        let scores = [0.1, 0.2, 0.3, 0.8, 0.9];
        let labels = [false, false, false, true, true];
        let p = pick_threshold(&scores, &labels, 0.95).unwrap();
        assert_eq!((p.sensitivity, p.specificity), (1.0, 1.0));
        assert!(p.reached);
    }

    #[test]
    fn full_sensitivity_is_at_most_min_positive() {
        let scores = [0.5, 0.2, 0.9, 0.4, 0.7];
        let labels = [true, false, true, true, false];
        let p = pick_threshold(&scores, &labels, 1.0).unwrap();
        assert!(p.threshold <= 0.4);
        assert_eq!(p.sensitivity, 1.0);
    }

    #[test]
    fn exhaustive_sweep() {
        let scores: Vec<f64> = (0..40).map(|i| ((i * 37 % 23) as f64 * 0.13).sin()).collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 3 != 0).collect();
        for target in [0.5, 0.8, 0.95] {
            let p = pick_threshold(&scores, &labels, target).unwrap();
            assert!(p.sensitivity >= target);
            let above = scores.iter().copied().filter(|&s| s > p.threshold).fold(f64::INFINITY, f64::min);
            assert!(rates(&scores, &labels, above).0 < target);
        }
        assert!(pick_threshold(&scores, &labels, 0.0).is_err());
    }
}
