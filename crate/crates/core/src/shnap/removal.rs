use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bridge::{remove_region, BridgeConfig, ScoreFunction};
use crate::volume::{RegionMask, VolumeGrid};

/// Produces a copy of `scan` with the masked region replaced.
pub trait RegionRemover: Send + Sync {
    fn remove(&self, scan: &VolumeGrid, mask: &RegionMask, seed: u64) -> Result<VolumeGrid, String>;
}

/// Removal by a full bridge trajectory under a healthy-tissue score.
#[derive(Clone)]
pub struct BridgeRemover {
    pub score: Arc<dyn ScoreFunction>,
    pub config: BridgeConfig,
}

impl BridgeRemover {
    pub fn new(score: Arc<dyn ScoreFunction>, config: BridgeConfig) -> Self {
        Self { score, config }
    }
}

impl RegionRemover for BridgeRemover {
    fn remove(&self, scan: &VolumeGrid, mask: &RegionMask, seed: u64) -> Result<VolumeGrid, String> {
        remove_region(scan, mask, self.score.as_ref(), &self.config, seed).map_err(|e| e.to_string())
    }
}

/// Fill the region with a constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FillRemover(pub f32);

impl RegionRemover for FillRemover {
    fn remove(&self, scan: &VolumeGrid, mask: &RegionMask, _seed: u64) -> Result<VolumeGrid, String> {
        let mut out = scan.clone();
        for i in mask.indices() {
            out.voxels_mut()[i] = self.0;
        }
        Ok(out)
    }
}

/// Counts trajectories passed through to the wrapped remover.
pub struct CountingRemover<R> {
    inner: R,
    calls: AtomicU64,
}

impl<R> CountingRemover<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }
}

impl<R: RegionRemover> RegionRemover for CountingRemover<R> {
    fn remove(&self, scan: &VolumeGrid, mask: &RegionMask, seed: u64) -> Result<VolumeGrid, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.remove(scan, mask, seed)
    }
}

/// Lung-tissue intensity used by the constant baseline.
pub const LUNG_TISSUE_HU: f32 = -800.0;

/// Intensity-replacement baselines that do not model tissue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaiveBaseline {
    GlobalMean,
    UnmaskedMean,
    Median,
    LungConstant,
}

impl NaiveBaseline {
    pub const ALL: [NaiveBaseline; 4] = [
        NaiveBaseline::GlobalMean,
        NaiveBaseline::UnmaskedMean,
        NaiveBaseline::Median,
        NaiveBaseline::LungConstant,
    ];

    /// Fill value for `scan`, given the union of all region masks.
    pub fn fill_value(self, scan: &VolumeGrid, regions: &RegionMask) -> f32 {
        match self {
            NaiveBaseline::GlobalMean => scan.mean() as f32,
            NaiveBaseline::UnmaskedMean => {
                let outside: Vec<f64> = (0..scan.len())
                    .filter(|&i| !regions.at(i))
                    .map(|i| scan.voxels()[i] as f64)
                    .collect();
                if outside.is_empty() {
                    scan.mean() as f32
                } else {
                    (outside.iter().sum::<f64>() / outside.len() as f64) as f32
                }
            }
            NaiveBaseline::Median => {
                let mut v = scan.voxels().to_vec();
                v.sort_by(f32::total_cmp);
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2]
                } else {
                    ((v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0) as f32
                }
            }
            NaiveBaseline::LungConstant => LUNG_TISSUE_HU,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_values() {
        let scan = VolumeGrid::new([4, 1, 1], [1.0; 3], vec![0.0, 10.0, 20.0, 100.0]).unwrap();
        let regions = RegionMask::from_bits([4, 1, 1], vec![false, false, false, true]).unwrap();
        assert_eq!(NaiveBaseline::GlobalMean.fill_value(&scan, &regions), 32.5);
        assert_eq!(NaiveBaseline::UnmaskedMean.fill_value(&scan, &regions), 10.0);
        assert_eq!(NaiveBaseline::Median.fill_value(&scan, &regions), 15.0);
        assert_eq!(NaiveBaseline::LungConstant.fill_value(&scan, &regions), -800.0);
        let out = FillRemover(-5.0).remove(&scan, &regions, 0).unwrap();
        assert_eq!(out.voxels(), &[0.0, 10.0, 20.0, -5.0]);
    }

    #[test]
    fn counter_counts() {
        let scan = VolumeGrid::filled([2, 2, 2], [1.0; 3], 0.0).unwrap();
        let mask = RegionMask::full([2, 2, 2]).unwrap();
        let r = CountingRemover::new(FillRemover(1.0));
        r.remove(&scan, &mask, 1).unwrap();
        r.remove(&scan, &mask, 2).unwrap();
        assert_eq!(r.calls(), 2);
    }
}
