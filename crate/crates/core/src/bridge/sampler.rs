use rand::Rng;
use rand_distr::StandardNormal;

use super::schedule::Schedule;
use super::score::{ScoreFunction, ScoreQuery};
use super::BridgeError;
use crate::seed;
use crate::volume::{Coord, Dims, RegionMask, VolumeGrid};

pub const DEFAULT_NFE: usize = 100;
pub const DEFAULT_TAU_FRACTION: f64 = 0.3;
/// Side of the cube an insertion is blended in.
pub const INSERT_CROP_SIDE: usize = 64;
/// Voxels of context around a pasted mask that the insertion may edit.
pub const INSERT_DILATION: usize = 3;

/// Latest time at which the score is evaluated; at t = 1 the marginal is a
/// point mass and no score exists.
const T_EVAL_MAX: f64 = 1.0 - 1e-6;

/// A masked bridge: the mask is editable, its complement is preserved.
#[derive(Clone, Debug)]
pub struct BridgeSystem {
    mask: RegionMask,
    schedule: Schedule,
    editable: Vec<usize>,
}

impl BridgeSystem {
    pub fn new(mask: RegionMask, schedule: Schedule) -> Self {
        let editable = mask.indices();
        Self {
            mask,
            schedule,
            editable,
        }
    }

    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn editable(&self) -> &[usize] {
        &self.editable
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeConfig {
    pub schedule: Schedule,
    pub nfe: usize,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::default(),
            nfe: DEFAULT_NFE,
        }
    }
}

impl BridgeConfig {
    pub fn default_tau_index(&self) -> usize {
        (DEFAULT_TAU_FRACTION * self.schedule.steps() as f64).round() as usize
    }
}

/// Sample the forward marginal at step `t_index`: editable voxels become
/// α x0 + √β z, preserved voxels are copied.
pub fn forward_diffuse(
    x0: &VolumeGrid,
    system: &BridgeSystem,
    t_index: usize,
    seed: u64,
) -> Result<VolumeGrid, BridgeError> {
    x0.ensure_same_dims(system.mask.dims())?;
    let sch = &system.schedule;
    sch.check_index(t_index)?;
    let mut out = x0.clone();
    if t_index == 0 {
        return Ok(out);
    }
    let voxels = out.voxels_mut();
    if t_index == sch.steps() {
        for &i in &system.editable {
            voxels[i] = 0.0;
        }
        return Ok(out);
    }
    let (a, sd) = (sch.alphas()[t_index], sch.betas()[t_index].sqrt());
    let mut rng = seed::rng(seed);
    for &i in &system.editable {
        let z: f64 = rng.sample(StandardNormal);
        voxels[i] = (a * voxels[i] as f64 + sd * z) as f32;
    }
    Ok(out)
}

/// Euler–Maruyama integration of the reverse SDE from `t_start_index` to 0
/// over `nfe` uniform steps, touching only the editable region.
///
/// Starting at the horizon, the editable region is reset to the bridge
/// endpoint (zero) first.
pub fn reverse_sample(
    x_start: &VolumeGrid,
    system: &BridgeSystem,
    score: &dyn ScoreFunction,
    t_start_index: usize,
    nfe: usize,
    seed: u64,
) -> Result<VolumeGrid, BridgeError> {
    x_start.ensure_same_dims(system.mask.dims())?;
    let sch = &system.schedule;
    sch.check_index(t_start_index)?;
    if nfe == 0 {
        return Err(BridgeError::InvalidNfe);
    }
    let mut work = x_start.clone();
    if t_start_index == 0 || system.editable.is_empty() {
        return Ok(work);
    }
    let editable = &system.editable;
    let mut state: Vec<f64> = if t_start_index == sch.steps() {
        vec![0.0; editable.len()]
    } else {
        editable.iter().map(|&i| x_start.voxels()[i] as f64).collect()
    };
    let t0 = sch.time_of(t_start_index);
    let h = t0 / nfe as f64;
    let mut rng = seed::rng(seed);
    for step in 0..nfe {
        let t = (t0 - step as f64 * h).min(T_EVAL_MAX);
        let s = score
            .score(&ScoreQuery {
                context: &work,
                editable,
                state: &state,
                t,
                alpha: sch.alpha(t),
                beta: sch.beta(t),
            })
            .map_err(|message| BridgeError::Score { step, message })?;
        if s.len() != state.len() {
            return Err(BridgeError::ScoreShape {
                step,
                expected: state.len(),
                got: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(BridgeError::Score {
                step,
                message: "non-finite score".into(),
            });
        }
        let (f, g2) = (sch.drift(t), sch.diffusion_sq(t));
        let noise_sd = (g2 * h).sqrt();
        let voxels = work.voxels_mut();
        for ((x, si), &idx) in state.iter_mut().zip(&s).zip(editable) {
            let z: f64 = rng.sample(StandardNormal);
            *x += -h * (f * *x - g2 * si) + noise_sd * z;
            voxels[idx] = *x as f32;
        }
    }
    if let Some(i) = work.voxels().iter().position(|v| !v.is_finite()) {
        return Err(BridgeError::Volume(crate::volume::VolumeError::NonFinite(i)));
    }
    Ok(work)
}

/// Destroy the masked content and regenerate it from the score's prior.
pub fn remove_region(
    x: &VolumeGrid,
    mask: &RegionMask,
    score: &dyn ScoreFunction,
    config: &BridgeConfig,
    seed: u64,
) -> Result<VolumeGrid, BridgeError> {
    if mask.is_empty() {
        return Err(BridgeError::EmptyMask);
    }
    let system = BridgeSystem::new(mask.clone(), config.schedule.clone());
    let steps = config.schedule.steps();
    let noised = forward_diffuse(x, &system, steps, seed::derive(seed, &[1]))?;
    reverse_sample(&noised, &system, score, steps, config.nfe, seed::derive(seed, &[2]))
}

/// Where a translated probe lands and which voxels blending may touch.
#[derive(Clone, Debug, PartialEq)]
pub struct InsertionSite {
    /// Added to a content coordinate to get the volume coordinate.
    pub offset: [isize; 3],
    /// Probe mask in volume coordinates.
    pub placed_mask: RegionMask,
    pub crop_origin: Coord,
    pub crop_dims: Dims,
    /// Dilated placed mask, in crop coordinates.
    pub editable: RegionMask,
}

/// Place the centre voxel (`dims / 2`) of the content at `center`.
pub fn insertion_site(
    dims: Dims,
    content_mask: &RegionMask,
    center: Coord,
) -> Result<InsertionSite, BridgeError> {
    let cd = content_mask.dims();
    let offset: [isize; 3] = std::array::from_fn(|a| center[a] as isize - (cd[a] / 2) as isize);
    let mut placed_mask = RegionMask::empty(dims)?;
    for idx in content_mask.indices() {
        let c = crate::volume::coord_of(cd, idx);
        let mut p = [0usize; 3];
        for a in 0..3 {
            let v = c[a] as isize + offset[a];
            if v < 0 || v >= dims[a] as isize {
                return Err(BridgeError::Placement(format!(
                    "probe centred at {center:?} leaves the volume {dims:?}"
                )));
            }
            p[a] = v as usize;
        }
        placed_mask.set(p, true);
    }
    let crop_dims: Dims = std::array::from_fn(|a| INSERT_CROP_SIDE.min(dims[a]));
    let crop_origin: Coord = std::array::from_fn(|a| {
        let lo = center[a].saturating_sub(INSERT_CROP_SIDE / 2);
        lo.min(dims[a] - crop_dims[a])
    });
    let editable = placed_mask.dilate(INSERT_DILATION).crop(crop_origin, crop_dims)?;
    if placed_mask.crop(crop_origin, crop_dims)?.count() < placed_mask.count() {
        return Err(BridgeError::Placement(format!(
            "probe centred at {center:?} does not fit the blending crop"
        )));
    }
    Ok(InsertionSite {
        offset,
        placed_mask,
        crop_origin,
        crop_dims,
        editable,
    })
}

/// Naive copy-paste of the masked content at `site`.
pub fn paste_content(x: &VolumeGrid, content: &VolumeGrid, site: &InsertionSite) -> VolumeGrid {
    let mut out = x.clone();
    for idx in site.placed_mask.indices() {
        let p = crate::volume::coord_of(x.dims(), idx);
        let c: Coord = std::array::from_fn(|a| (p[a] as isize - site.offset[a]) as usize);
        out.voxels_mut()[idx] = content.get(c);
    }
    out
}

/// Paste `content` under `content_mask` at `center`, then blend it into its
/// neighbourhood by diffusing to `tau_index` and sampling back.
#[allow(clippy::too_many_arguments)]
pub fn insert_region(
    x: &VolumeGrid,
    content: &VolumeGrid,
    content_mask: &RegionMask,
    center: Coord,
    tau_index: usize,
    score: &dyn ScoreFunction,
    config: &BridgeConfig,
    seed: u64,
) -> Result<VolumeGrid, BridgeError> {
    content.ensure_same_dims(content_mask.dims())?;
    config.schedule.check_index(tau_index)?;
    let site = insertion_site(x.dims(), content_mask, center)?;
    let mut pasted = paste_content(x, content, &site);
    if tau_index == 0 {
        return Ok(pasted);
    }
    let crop = pasted.crop(site.crop_origin, site.crop_dims)?;
    let system = BridgeSystem::new(site.editable.clone(), config.schedule.clone());
    let noised = forward_diffuse(&crop, &system, tau_index, seed::derive(seed, &[1]))?;
    let blended = reverse_sample(&noised, &system, score, tau_index, config.nfe, seed::derive(seed, &[2]))?;
    pasted.paste(site.crop_origin, &blended)?;
    Ok(pasted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::score::IidGaussianScore;
    use crate::volume::linear_index;

    fn grid(dims: Dims) -> VolumeGrid {
        let n = dims.iter().product::<usize>();
        VolumeGrid::new(dims, [1.0; 3], (0..n).map(|i| (i as f32 * 0.37).sin() * 3.0).collect()).unwrap()
    }

    fn centre_mask(dims: Dims) -> RegionMask {
        RegionMask::from_fn(dims, |c| (0..3).all(|a| c[a] >= 1 && c[a] + 1 < dims[a])).unwrap()
    }

    #[test]
    fn forward_endpoints() {
        let x = grid([4, 4, 4]);
        let sys = BridgeSystem::new(centre_mask([4, 4, 4]), Schedule::default());
        assert_eq!(forward_diffuse(&x, &sys, 0, 7).unwrap(), x);
        let end = forward_diffuse(&x, &sys, 1000, 7).unwrap();
        for i in 0..x.len() {
            let expected = if sys.mask().at(i) { 0.0 } else { x.voxels()[i] };
            assert_eq!(end.voxels()[i].to_bits(), expected.to_bits());
        }
        assert!(forward_diffuse(&x, &sys, 1001, 7).is_err());
    }

    #[test]
    fn forward_moments() {
        let x = grid([3, 3, 1]);
        let mask = RegionMask::from_fn([3, 3, 1], |c| c[0] == 1 && c[1] == 1).unwrap();
        let sys = BridgeSystem::new(mask, Schedule::default());
        let idx = 4;
        let n = 10_000;
        let draws: Vec<f64> = (0..n)
            .map(|s| forward_diffuse(&x, &sys, 400, s).unwrap().voxels()[idx] as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let (a, b) = (0.6, 0.24);
        let m = a * x.voxels()[idx] as f64;
        assert!((mean - m).abs() < 4.0 * (b / n as f64).sqrt());
        assert!((var - b).abs() < 4.0 * b * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn reverse_preserves_and_is_deterministic() {
        let x = grid([4, 4, 4]);
        let sys = BridgeSystem::new(centre_mask([4, 4, 4]), Schedule::default());
        let score = IidGaussianScore::new(0.5, 1.0).unwrap();
        assert_eq!(reverse_sample(&x, &sys, &score, 0, 10, 1).unwrap(), x);
        let a = reverse_sample(&x, &sys, &score, 1000, 100, 3).unwrap();
        let b = reverse_sample(&x, &sys, &score, 1000, 100, 3).unwrap();
        assert_eq!(a, b);
        for i in 0..x.len() {
            if !sys.mask().at(i) {
                assert_eq!(a.voxels()[i].to_bits(), x.voxels()[i].to_bits());
            }
        }
        assert!(matches!(
            reverse_sample(&x, &sys, &score, 500, 0, 1),
            Err(BridgeError::InvalidNfe)
        ));
    }

    struct Failing;
    impl ScoreFunction for Failing {
        fn score(&self, q: &ScoreQuery<'_>) -> Result<Vec<f64>, String> {
            if q.t < 0.5 {
                Err("diverged".into())
            } else {
                Ok(vec![0.0; q.state.len()])
            }
        }
    }

    #[test]
    fn score_failure_reports_step() {
        let x = grid([4, 4, 4]);
        let sys = BridgeSystem::new(centre_mask([4, 4, 4]), Schedule::default());
        match reverse_sample(&x, &sys, &Failing, 1000, 10, 1) {
            Err(BridgeError::Score { step, .. }) => assert_eq!(step, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn removal_requires_mask() {
        let x = grid([3, 3, 3]);
        let score = IidGaussianScore::new(0.0, 1.0).unwrap();
        let empty = RegionMask::empty([3, 3, 3]).unwrap();
        assert!(matches!(
            remove_region(&x, &empty, &score, &BridgeConfig::default(), 0),
            Err(BridgeError::EmptyMask)
        ));
    }

    #[test]
    fn insertion_at_zero_is_copy_paste() {
        let x = VolumeGrid::filled([12, 12, 12], [1.0; 3], -800.0).unwrap();
        let content = VolumeGrid::filled([3, 3, 3], [1.0; 3], 40.0).unwrap();
        let cmask = RegionMask::from_fn([3, 3, 3], |c| c == [1, 1, 1] || c == [2, 1, 1]).unwrap();
        let score = IidGaussianScore::new(0.0, 1.0).unwrap();
        let cfg = BridgeConfig::default();
        let out = insert_region(&x, &content, &cmask, [5, 6, 7], 0, &score, &cfg, 1).unwrap();
        let changed: Vec<usize> = (0..x.len()).filter(|&i| out.voxels()[i] != x.voxels()[i]).collect();
        assert_eq!(changed, vec![linear_index([12; 3], [5, 6, 7]), linear_index([12; 3], [6, 6, 7])]);
        assert!(insert_region(&x, &content, &cmask, [11, 6, 7], 0, &score, &cfg, 1).is_err());
    }

    #[test]
    fn insertion_edits_only_the_neighbourhood() {
        let x = VolumeGrid::filled([80, 20, 20], [1.0; 3], 0.0).unwrap();
        let content = VolumeGrid::filled([3, 3, 3], [1.0; 3], 2.0).unwrap();
        let cmask = RegionMask::full([3, 3, 3]).unwrap();
        let site = insertion_site([80, 20, 20], &cmask, [70, 10, 10]).unwrap();
        assert_eq!(site.crop_dims, [64, 20, 20]);
        assert_eq!(site.crop_origin, [16, 0, 0]);
        let score = IidGaussianScore::new(0.0, 1.0).unwrap();
        let cfg = BridgeConfig::default();
        let out = insert_region(&x, &content, &cmask, [70, 10, 10], 300, &score, &cfg, 4).unwrap();
        let near = cmask_dilated(&site);
        for i in 0..x.len() {
            if !near.at(i) {
                assert_eq!(out.voxels()[i].to_bits(), x.voxels()[i].to_bits());
            }
        }
    }

    fn cmask_dilated(site: &InsertionSite) -> RegionMask {
        site.placed_mask.dilate(INSERT_DILATION)
    }
}
