use rayon::prelude::*;
use serde::Serialize;

use super::removal::RegionRemover;
use super::ShnapError;
use crate::coalition::{
    fidelity_r2, n_shapley, CoalitionGame, FidelityReport, InteractionAttribution, Subset, MAX_PLAYERS,
};
use crate::model::{sigmoid, ModelHandle};
use crate::seed;
use crate::volume::{recompose, sphere_mask, NoduleSpec, RegionMask, VolumeError, VolumeGrid};

/// Interaction order of the public explanation.
pub const SHNAP_ORDER: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub label: String,
    pub mask: RegionMask,
}

/// A scan and the disjoint regions whose contributions are audited.
#[derive(Clone, Debug)]
pub struct AuditCase {
    scan: VolumeGrid,
    regions: Vec<Region>,
}

impl AuditCase {
    pub fn new(scan: VolumeGrid, regions: Vec<Region>) -> Result<Self, ShnapError> {
        if regions.len() > MAX_PLAYERS {
            return Err(ShnapError::InvalidCase(format!(
                "{} regions exceeds the limit of {MAX_PLAYERS}",
                regions.len()
            )));
        }
        for (i, r) in regions.iter().enumerate() {
            if r.mask.dims() != scan.dims() {
                return Err(VolumeError::DimMismatch {
                    expected: scan.dims(),
                    got: r.mask.dims(),
                }
                .into());
            }
            if r.mask.is_empty() {
                return Err(ShnapError::InvalidCase(format!("region {i} ({}) is empty", r.label)));
            }
            for (j, other) in regions.iter().enumerate().take(i) {
                if r.mask.intersects(&other.mask) {
                    return Err(VolumeError::OverlappingMasks(j, i).into());
                }
            }
        }
        Ok(Self { scan, regions })
    }

    /// One spherical region per nodule, labelled by its id.
    pub fn from_nodules(scan: VolumeGrid, nodules: &[NoduleSpec]) -> Result<Self, ShnapError> {
        let regions = nodules
            .iter()
            .map(|n| {
                Ok(Region {
                    label: n.id.clone(),
                    mask: sphere_mask(scan.dims(), scan.spacing_mm(), n)?,
                })
            })
            .collect::<Result<Vec<_>, VolumeError>>()?;
        Self::new(scan, regions)
    }

    pub fn scan(&self) -> &VolumeGrid {
        &self.scan
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn labels(&self) -> Vec<String> {
        self.regions.iter().map(|r| r.label.clone()).collect()
    }

    /// Union of all region masks.
    pub fn union_mask(&self) -> RegionMask {
        let mut m = RegionMask::empty(self.scan.dims()).expect("scan dims are valid");
        for r in &self.regions {
            m.union_with(&r.mask).expect("dims checked");
        }
        m
    }
}

/// Relative contribution (σ(f) − σ(μ)) / σ(f) of the regions to the
/// predicted probability.
pub fn rnc(full_logit: f64, baseline_logit: f64) -> f64 {
    let sf = sigmoid(full_logit);
    (sf - sigmoid(baseline_logit)) / sf
}

/// One removal-and-scoring pass.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub run: usize,
    pub game: CoalitionGame,
}

fn order_for(n: usize) -> usize {
    SHNAP_ORDER.min(n).max(1)
}

/// Score every coalition of one run: `N` removals and `2^N` model queries.
pub fn shnap_run(
    case: &AuditCase,
    model: &ModelHandle,
    remover: &dyn RegionRemover,
    base_seed: u64,
    run: usize,
) -> Result<RunResult, ShnapError> {
    let scan = &case.scan;
    let removed: Vec<VolumeGrid> = case
        .regions
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            remover
                .remove(scan, &r.mask, seed::derive(base_seed, &[run as u64, i as u64]))
                .map_err(|message| ShnapError::Removal { region: i, message })
        })
        .collect::<Result<_, _>>()?;
    let parts: Vec<(&VolumeGrid, &RegionMask)> = removed.iter().zip(&case.regions).map(|(g, r)| (g, &r.mask)).collect();
    let empty = recompose(scan, &parts)?;
    let indices: Vec<Vec<usize>> = case.regions.iter().map(|r| r.mask.indices()).collect();
    let game = CoalitionGame::evaluate(case.regions.len(), |s: Subset| {
        let mut x = empty.clone();
        let (dst, src) = (x.voxels_mut(), scan.voxels());
        for (i, idx) in indices.iter().enumerate() {
            if s >> i & 1 == 1 {
                for &v in idx {
                    dst[v] = src[v];
                }
            }
        }
        model.query_risk(&x).map(|o| o.base_logit)
    })?;
    Ok(RunResult { run, game })
}

/// Runs `0..runs` with seeds derived from `(run, region)`.
pub fn shnap_runs(
    case: &AuditCase,
    model: &ModelHandle,
    remover: &dyn RegionRemover,
    seed: u64,
    runs: usize,
) -> Result<Vec<RunResult>, ShnapError> {
    if runs == 0 {
        return Err(ShnapError::NoRuns);
    }
    (0..runs).map(|r| shnap_run(case, model, remover, seed, r)).collect()
}

#[derive(Clone, Debug)]
pub struct ShnapExplanation {
    pub region_labels: Vec<String>,
    /// Logit of the unmodified scan, v(all regions).
    pub full_logit: f64,
    /// φ_∅, the logit attributed to the region-free scan.
    pub baseline_mu: f64,
    /// Run-averaged coefficients.
    pub attribution: InteractionAttribution,
    /// Fit of the averaged coefficients to the run-averaged game.
    pub fidelity: FidelityReport,
    pub rnc: f64,
    /// Sample standard deviation of each coefficient across runs, aligned
    /// with `attribution.terms()`; zero for a single run.
    pub per_run_std: Vec<f64>,
    pub runs: usize,
    /// Run-averaged coalition values.
    pub game: CoalitionGame,
}

impl ShnapExplanation {
    pub fn from_runs(labels: Vec<String>, runs: &[RunResult]) -> Result<Self, ShnapError> {
        let first = runs.first().ok_or(ShnapError::NoRuns)?;
        let n = first.game.n_players();
        let order = order_for(n);
        let per_run: Vec<InteractionAttribution> =
            runs.iter().map(|r| n_shapley(&r.game, order)).collect::<Result<_, _>>()?;
        let k = per_run[0].coefficients().len();
        let count = runs.len() as f64;
        let mean: Vec<f64> = (0..k)
            .map(|c| per_run.iter().map(|a| a.coefficients()[c]).sum::<f64>() / count)
            .collect();
        let per_run_std: Vec<f64> = (0..k)
            .map(|c| {
                if runs.len() < 2 {
                    0.0
                } else {
                    let ss: f64 = per_run.iter().map(|a| (a.coefficients()[c] - mean[c]).powi(2)).sum();
                    (ss / (count - 1.0)).sqrt()
                }
            })
            .collect();
        let mut it = mean.iter().copied();
        let attribution = InteractionAttribution::from_terms(n, order, |_| it.next().unwrap_or(f64::NAN))?;
        let size = 1usize << n;
        let avg: Vec<f64> = (0..size)
            .map(|s| runs.iter().map(|r| r.game.values()[s]).sum::<f64>() / count)
            .collect();
        let game = CoalitionGame::from_values(n, avg)?;
        let fidelity = fidelity_r2(&game, &attribution)?;
        let full_logit = game.value(game.grand_coalition());
        let baseline_mu = attribution.phi_empty();
        Ok(Self {
            region_labels: labels,
            full_logit,
            baseline_mu,
            rnc: if n == 0 { 0.0 } else { rnc(full_logit, baseline_mu) },
            attribution,
            fidelity,
            per_run_std,
            runs: runs.len(),
            game,
        })
    }

    /// Std of each coefficient arranged like the report.
    pub fn std_layout(&self) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let n = self.attribution.n_players();
        let mut main = vec![0.0; n];
        let mut pair = vec![vec![0.0; n]; n];
        let mut base = 0.0;
        for ((s, _), sd) in self.attribution.terms().zip(&self.per_run_std) {
            let bits: Vec<usize> = (0..n).filter(|&i| s >> i & 1 == 1).collect();
            match bits.as_slice() {
                [] => base = *sd,
                [i] => main[*i] = *sd,
                [i, j] => {
                    pair[*i][*j] = *sd;
                    pair[*j][*i] = *sd;
                }
                _ => {}
            }
        }
        (base, main, pair)
    }

    pub fn report(&self) -> ShnapReport {
        let (base, main, pair) = self.std_layout();
        ShnapReport {
            region_labels: self.region_labels.clone(),
            full_logit: self.full_logit,
            baseline_mu: self.baseline_mu,
            phi_main: self.attribution.phi_main(),
            phi_pair: self.attribution.phi_pair(),
            r2: self.fidelity.r2,
            rnc: self.rnc,
            per_run_std: StdReport {
                baseline: base,
                main,
                pair,
            },
            runs: self.runs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StdReport {
    pub baseline: f64,
    pub main: Vec<f64>,
    pub pair: Vec<Vec<f64>>,
}

/// Serialized form of an explanation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShnapReport {
    pub baseline_mu: f64,
    pub full_logit: f64,
    pub phi_main: Vec<f64>,
    pub phi_pair: Vec<Vec<f64>>,
    pub r2: f64,
    pub rnc: f64,
    pub per_run_std: StdReport,
    pub runs: usize,
    pub region_labels: Vec<String>,
}

/// Remove, recompose, score and project, averaging over `runs`.
pub fn shnap_explain(
    case: &AuditCase,
    model: &ModelHandle,
    remover: &dyn RegionRemover,
    seed: u64,
    runs: usize,
) -> Result<ShnapExplanation, ShnapError> {
    let results = shnap_runs(case, model, remover, seed, runs)?;
    ShnapExplanation::from_runs(case.labels(), &results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ToyLmpiModelSpec, ToySite};
    use crate::shnap::removal::{CountingRemover, FillRemover};

    fn case_and_model(n: usize) -> (AuditCase, ModelHandle, ToyLmpiModelSpec) {
        let mut scan = VolumeGrid::filled([24, 10, 10], [1.0; 3], -800.0).unwrap();
        let sites: Vec<ToySite> = (0..n).map(|i| ToySite { center: [3 + 6 * i, 5, 5], radius_mm: 2.0 }).collect();
        let mut spec = ToyLmpiModelSpec::additive(sites.clone(), -1.5, (0..n).map(|i| 0.4 + 0.3 * i as f64).collect());
        if n >= 2 {
            spec.beta_pair[0][1] = -0.7;
            spec.beta_pair[1][0] = -0.7;
        }
        let masks = spec.site_masks(scan.dims(), scan.spacing_mm()).unwrap();
        let regions = masks
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                for idx in m.indices() {
                    scan.voxels_mut()[idx] = -40.0;
                }
                Region { label: format!("r{i}"), mask: m }
            })
            .collect();
        let case = AuditCase::new(scan, regions).unwrap();
        (case, ModelHandle::toy(spec.clone()).unwrap(), spec)
    }

    #[test]
    fn rnc_values() {
        assert_eq!(rnc(0.3, 0.3), 0.0);
        let expected = (0.5 - 1.0 / (1.0 + 1f64.exp())) / 0.5;
        assert!((rnc(0.0, -1.0) - expected).abs() < 1e-15);
        assert!((rnc(0.0, -1.0) - 0.46212).abs() < 1e-5);
        assert!(rnc(-2.0, 1.0) < 0.0);
    }

    #[test]
    fn no_regions_is_baseline_only() {
        let (case, model, spec) = case_and_model(0);
        let e = shnap_explain(&case, &model, &FillRemover(-800.0), 1, 2).unwrap();
        assert_eq!(e.baseline_mu, spec.beta0);
        assert_eq!(e.rnc, 0.0);
        assert_eq!(model.queries(), 2);
    }

    #[test]
    fn single_region_is_exact() {
        let (case, model, spec) = case_and_model(1);
        let e = shnap_explain(&case, &model, &FillRemover(-800.0), 1, 1).unwrap();
        assert!((e.attribution.phi_main()[0] - spec.beta_main[0]).abs() < 1e-12);
        assert!((e.fidelity.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_recovery_and_budget() {
        let (case, model, spec) = case_and_model(3);
        let remover = CountingRemover::new(FillRemover(-800.0));
        let e = shnap_explain(&case, &model, &remover, 9, 2).unwrap();
        assert_eq!(model.queries(), 2 * 8);
        assert_eq!(remover.calls(), 2 * 3);
        assert!((e.baseline_mu - spec.beta0).abs() < 1e-12);
        for i in 0..3 {
            assert!((e.attribution.phi_main()[i] - spec.beta_main[i]).abs() < 1e-12);
            for j in 0..3 {
                assert!((e.attribution.phi_pair()[i][j] - spec.beta_pair[i][j]).abs() < 1e-12);
            }
        }
        assert!(e.per_run_std.iter().all(|&s| s == 0.0));
        let json = serde_json::to_value(e.report()).unwrap();
        assert_eq!(json["phi_main"].as_array().unwrap().len(), 3);
        assert_eq!(json["region_labels"][2], "r2");
    }

    #[test]
    fn overlapping_regions_rejected() {
        let scan = VolumeGrid::filled([4, 4, 4], [1.0; 3], 0.0).unwrap();
        let m = RegionMask::from_fn([4, 4, 4], |c| c[0] < 2).unwrap();
        let regions = vec![
            Region { label: "a".into(), mask: m.clone() },
            Region { label: "b".into(), mask: m },
        ];
        assert!(AuditCase::new(scan, regions).is_err());
    }
}
