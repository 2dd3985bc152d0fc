use std::sync::OnceLock;

use rayon::prelude::*;

use super::SnapError;
use crate::bridge::{insert_region, insertion_site, BridgeConfig, ScoreFunction, INSERT_CROP_SIDE};
use crate::model::ModelHandle;
use crate::seed;
use crate::volume::{sphere_mask, Coord, Malignancy, NoduleSpec, RegionMask, VolumeGrid};

/// A nodule crop and its mask, placed by its centre voxel.
#[derive(Clone, Debug, PartialEq)]
pub struct InsertionProbe {
    pub content: VolumeGrid,
    pub mask: RegionMask,
    pub label: Malignancy,
    pub source_id: String,
}

impl InsertionProbe {
    pub fn new(content: VolumeGrid, mask: RegionMask, label: Malignancy, source_id: impl Into<String>) -> Result<Self, SnapError> {
        if content.dims() != mask.dims() {
            return Err(SnapError::InvalidProbe(format!(
                "content {:?} and mask {:?} differ",
                content.dims(),
                mask.dims()
            )));
        }
        if content.dims().iter().any(|&d| d > INSERT_CROP_SIDE) {
            return Err(SnapError::InvalidProbe(format!(
                "crop {:?} exceeds {INSERT_CROP_SIDE} voxels per side",
                content.dims()
            )));
        }
        if mask.is_empty() {
            return Err(SnapError::InvalidProbe("empty mask".into()));
        }
        Ok(Self {
            content,
            mask,
            label,
            source_id: source_id.into(),
        })
    }

    /// Cut a probe centred on `nodule` out of `scan`, with `margin` extra
    /// voxels around the sphere on every side.
    pub fn from_nodule(scan: &VolumeGrid, nodule: &NoduleSpec, margin: usize) -> Result<Self, SnapError> {
        let sp = scan.spacing_mm();
        let half: [usize; 3] = std::array::from_fn(|a| (nodule.radius_mm / sp[a]).ceil() as usize + margin);
        let dims = scan.dims();
        for a in 0..3 {
            if nodule.center[a] < half[a] || nodule.center[a] + half[a] >= dims[a] {
                return Err(SnapError::InvalidProbe(format!(
                    "nodule {} is too close to the volume edge",
                    nodule.id
                )));
            }
        }
        let origin: Coord = std::array::from_fn(|a| nodule.center[a] - half[a]);
        let size: Coord = std::array::from_fn(|a| 2 * half[a] + 1);
        let mask = sphere_mask(dims, sp, nodule)?.crop(origin, size)?;
        Self::new(scan.crop(origin, size)?, mask, nodule.malignancy, nodule.id.clone())
    }
}

/// Lattice points with step `stride` anchored at the lung bounding-box
/// minimum, restricted to the lung.
pub fn lattice_centers(lung: &RegionMask, stride: usize) -> Result<Vec<Coord>, SnapError> {
    if stride == 0 {
        return Err(SnapError::InvalidStride);
    }
    let Some((lo, hi)) = lung.bounding_box() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for i in (lo[0]..=hi[0]).step_by(stride) {
        for j in (lo[1]..=hi[1]).step_by(stride) {
            for k in (lo[2]..=hi[2]).step_by(stride) {
                if lung.get([i, j, k]) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    Ok(out)
}

/// Everything a probe needs besides the probe itself. The unmodified-scan
/// logit is queried once and reused.
pub struct SnapProber<'a> {
    scan: &'a VolumeGrid,
    lung: &'a RegionMask,
    model: &'a ModelHandle,
    score: &'a dyn ScoreFunction,
    config: &'a BridgeConfig,
    tau_index: usize,
    base: OnceLock<f64>,
}

impl<'a> SnapProber<'a> {
    pub fn new(
        scan: &'a VolumeGrid,
        lung: &'a RegionMask,
        model: &'a ModelHandle,
        score: &'a dyn ScoreFunction,
        config: &'a BridgeConfig,
        tau_index: usize,
    ) -> Result<Self, SnapError> {
        scan.ensure_same_dims(lung.dims())?;
        config.schedule.check_index(tau_index)?;
        Ok(Self {
            scan,
            lung,
            model,
            score,
            config,
            tau_index,
            base: OnceLock::new(),
        })
    }

    pub fn base_logit(&self) -> Result<f64, SnapError> {
        if let Some(&v) = self.base.get() {
            return Ok(v);
        }
        let v = self
            .model
            .query_risk(self.scan)
            .map_err(|source| SnapError::Model { center: None, source })?
            .base_logit;
        Ok(*self.base.get_or_init(|| v))
    }

    /// ψ at `center`: inserted-scan logit minus unmodified-scan logit.
    pub fn probe(&self, probe: &InsertionProbe, center: Coord, seed: u64) -> Result<f64, SnapError> {
        if center.iter().zip(self.lung.dims()).any(|(&c, d)| c >= d) || !self.lung.get(center) {
            return Err(SnapError::OutsideLung(center));
        }
        let base = self.base_logit()?;
        let inserted = insert_region(
            self.scan,
            &probe.content,
            &probe.mask,
            center,
            self.tau_index,
            self.score,
            self.config,
            seed,
        )?;
        let logit = self
            .model
            .query_risk(&inserted)
            .map_err(|source| SnapError::Model { center: Some(center), source })?
            .base_logit;
        Ok(logit - base)
    }
}

/// One-off probe at a single center.
#[allow(clippy::too_many_arguments)]
pub fn snap_probe(
    scan: &VolumeGrid,
    lung: &RegionMask,
    probe: &InsertionProbe,
    center: Coord,
    tau_index: usize,
    config: &BridgeConfig,
    score: &dyn ScoreFunction,
    model: &ModelHandle,
    seed: u64,
) -> Result<f64, SnapError> {
    SnapProber::new(scan, lung, model, score, config, tau_index)?.probe(probe, center, seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapMap {
    pub centers: Vec<Coord>,
    pub psi: Vec<f64>,
    pub stride: usize,
    pub base_logit: f64,
    /// Lattice centers whose placement left the volume or blending crop.
    pub skipped: Vec<Coord>,
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
}

impl SnapMap {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

fn center_seed(seed: u64, c: Coord) -> u64 {
    seed::derive(seed, &[c[0] as u64, c[1] as u64, c[2] as u64])
}

/// Probe every lattice center inside the lung.
pub fn snap_map(prober: &SnapProber<'_>, probe: &InsertionProbe, stride: usize, seed: u64) -> Result<SnapMap, SnapError> {
    let lattice = lattice_centers(prober.lung, stride)?;
    let mut map = snap_centers(prober, probe, &lattice, seed)?;
    map.stride = stride;
    Ok(map)
}

/// Probe the given centers in parallel; a center's ψ depends only on the
/// center and `seed`. Centers where the probe does not fit are skipped.
pub fn snap_centers(prober: &SnapProber<'_>, probe: &InsertionProbe, centers: &[Coord], seed: u64) -> Result<SnapMap, SnapError> {
    let base_logit = prober.base_logit()?;
    let dims = prober.scan.dims();
    let (fits, skipped): (Vec<Coord>, Vec<Coord>) = centers
        .iter()
        .copied()
        .partition(|&c| insertion_site(dims, &probe.mask, c).is_ok());
    for c in &skipped {
        log::info!("skipping center {c:?}: probe does not fit");
    }
    if fits.is_empty() {
        return Err(SnapError::EmptyMap);
    }
    let psi = fits
        .par_iter()
        .map(|&c| prober.probe(probe, c, center_seed(seed, c)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SnapMap {
        centers: fits,
        psi,
        stride: 0,
        base_logit,
        skipped,
        dims,
        spacing_mm: prober.scan.spacing_mm(),
    })
}
