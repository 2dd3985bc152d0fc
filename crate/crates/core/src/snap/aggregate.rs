use serde::Serialize;

use super::{SnapError, SnapMap};
use crate::volume::{DistanceField, LobeLabelMap, Lobe, VolumeError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LobeGroup {
    pub lobe: Lobe,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single center.
    pub std: f64,
}

/// ψ grouped by lobe. Centers labelled `none` are only counted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LobeAggregate {
    pub patient_id: Option<String>,
    pub probe_id: Option<String>,
    pub groups: Vec<LobeGroup>,
    pub outside: usize,
}

impl LobeAggregate {
    pub fn group(&self, lobe: Lobe) -> Option<&LobeGroup> {
        self.groups.iter().find(|g| g.lobe == lobe)
    }

    pub fn with_ids(mut self, patient_id: impl Into<String>, probe_id: impl Into<String>) -> Self {
        self.patient_id = Some(patient_id.into());
        self.probe_id = Some(probe_id.into());
        self
    }
}

pub fn aggregate_by_lobe(map: &SnapMap, lobes: &LobeLabelMap) -> Result<LobeAggregate, SnapError> {
    if lobes.dims() != map.dims {
        return Err(VolumeError::DimMismatch {
            expected: map.dims,
            got: lobes.dims(),
        }
        .into());
    }
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); Lobe::ALL.len()];
    for (c, &p) in map.centers.iter().zip(&map.psi) {
        buckets[lobes.get(*c).code() as usize].push(p);
    }
    let outside = buckets[Lobe::None.code() as usize].len();
    let groups = Lobe::ALL
        .iter()
        .filter(|&&l| l != Lobe::None)
        .filter_map(|&lobe| {
            let v = &buckets[lobe.code() as usize];
            if v.is_empty() {
                return None;
            }
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let std = if v.len() < 2 {
                0.0
            } else {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            Some(LobeGroup {
                lobe,
                count: v.len(),
                mean,
                std,
            })
        })
        .collect();
    Ok(LobeAggregate {
        patient_id: None,
        probe_id: None,
        groups,
        outside,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialPoint {
    pub distance_mm: f64,
    pub psi: f64,
}

/// Pair each ψ with the pleural distance at its center.
pub fn radial_profile(map: &SnapMap, distance: &DistanceField) -> Result<Vec<RadialPoint>, SnapError> {
    map.centers
        .iter()
        .zip(&map.psi)
        .map(|(&c, &psi)| {
            distance
                .get(c)
                .map(|distance_mm| RadialPoint { distance_mm, psi })
                .ok_or(SnapError::NoDistance(c))
        })
        .collect()
}
