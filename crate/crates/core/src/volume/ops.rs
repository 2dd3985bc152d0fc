use super::grid::{check_spacing, coord_of, Dims, VolumeGrid};
use super::mask::RegionMask;
use super::VolumeError;

/// Replace the content of `base` inside each part's mask by that part's voxels.
///
/// Masks must be pairwise disjoint. Voxels outside every mask are copied
/// bit-exact from `base`.
pub fn recompose(
    base: &VolumeGrid,
    parts: &[(&VolumeGrid, &RegionMask)],
) -> Result<VolumeGrid, VolumeError> {
    for (a, (grid, mask)) in parts.iter().enumerate() {
        base.ensure_same_dims(grid.dims())?;
        base.ensure_same_dims(mask.dims())?;
        for (b, (_, other)) in parts.iter().enumerate().skip(a + 1) {
            if mask.intersects(other) {
                return Err(VolumeError::OverlappingMasks(a, b));
            }
        }
    }
    let mut out = base.clone();
    let voxels = out.voxels_mut();
    for (grid, mask) in parts {
        let src = grid.voxels();
        for idx in mask.indices() {
            voxels[idx] = src[idx];
        }
    }
    Ok(out)
}

/// Euclidean distance field, defined on the set voxels of a mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    dims: Dims,
    values: Vec<Option<f64>>,
}

impl DistanceField {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Distance at voxel `c`; `None` outside the mask the field was built from.
    pub fn get(&self, c: [usize; 3]) -> Option<f64> {
        if c.iter().zip(self.dims.iter()).any(|(a, d)| a >= d) {
            return None;
        }
        self.values[super::grid::linear_index(self.dims, c)]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }
}

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas) with sample spacing `h`.
fn edt_1d(f: &[f64], h: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let pos = |q: usize| q as f64 * h;
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q].is_infinite() {
            continue;
        }
        if f[v[0]].is_infinite() {
            v[0] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0: new parabola dominates everywhere
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if f[v[0]].is_infinite() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < pos(q) {
            k += 1;
        }
        let d = pos(q) - pos(v[k]);
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance (mm) from every set voxel to the nearest unset
/// voxel center, via a separable squared-distance transform.
pub fn distance_to_boundary(
    mask: &RegionMask,
    spacing_mm: [f64; 3],
) -> Result<DistanceField, VolumeError> {
    check_spacing(spacing_mm)?;
    if mask.is_empty() || mask.is_full() {
        return Err(VolumeError::UndefinedBoundary);
    }
    let dims = mask.dims();
    let mut sq: Vec<f64> = mask
        .bits()
        .iter()
        .map(|&b| if b { f64::INFINITY } else { 0.0 })
        .collect();
    let maxn = *dims.iter().max().unwrap();
    let mut line = vec![0.0; maxn];
    let mut out = vec![0.0; maxn];
    let mut v = vec![0usize; maxn];
    let mut z = vec![0.0; maxn + 1];
    let strides = [1, dims[0], dims[0] * dims[1]];
    for axis in 0..3 {
        let n = dims[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for b in 0..dims[o2] {
            for a in 0..dims[o1] {
                let start = a * strides[o1] + b * strides[o2];
                for q in 0..n {
                    line[q] = sq[start + q * strides[axis]];
                }
                edt_1d(&line[..n], spacing_mm[axis], &mut out[..n], &mut v, &mut z);
                for q in 0..n {
                    sq[start + q * strides[axis]] = out[q];
                }
            }
        }
    }
    let values = sq
        .iter()
        .enumerate()
        .map(|(i, &d2)| mask.at(i).then(|| d2.sqrt()))
        .collect();
    Ok(DistanceField { dims, values })
}

/// Brute-force nearest-outside search; quadratic, meant for small grids.
pub fn distance_to_boundary_bruteforce(
    mask: &RegionMask,
    spacing_mm: [f64; 3],
) -> Result<DistanceField, VolumeError> {
    check_spacing(spacing_mm)?;
    if mask.is_empty() || mask.is_full() {
        return Err(VolumeError::UndefinedBoundary);
    }
    let dims = mask.dims();
    let outside: Vec<[usize; 3]> = mask
        .complement()
        .indices()
        .into_iter()
        .map(|i| coord_of(dims, i))
        .collect();
    let values = (0..mask.bits().len())
        .map(|i| {
            mask.at(i).then(|| {
                let c = coord_of(dims, i);
                outside
                    .iter()
                    .map(|&o| super::mask::dist2_mm(c, o, spacing_mm))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
        })
        .collect();
    Ok(DistanceField { dims, values })
}

/// Reconstruction quality restricted to a mask.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MaskedMetrics {
    pub rmse_hu: f64,
    pub mae_hu: f64,
    pub ssim: f64,
}

/// Dynamic range used by the SSIM stabilising constants.
pub const SSIM_DYNAMIC_RANGE_HU: f64 = 2000.0;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// RMSE, MAE and single-window SSIM over the set voxels of `mask`.
pub fn masked_metrics(
    a: &VolumeGrid,
    b: &VolumeGrid,
    mask: &RegionMask,
) -> Result<MaskedMetrics, VolumeError> {
    a.ensure_same_dims(b.dims())?;
    a.ensure_same_dims(mask.dims())?;
    let idx = mask.indices();
    if idx.is_empty() {
        return Err(VolumeError::EmptyMask);
    }
    let n = idx.len() as f64;
    let (va, vb) = (a.voxels(), b.voxels());
    let (mut se, mut ae, mut sa, mut sb) = (0.0, 0.0, 0.0, 0.0);
    for &i in &idx {
        let (x, y) = (va[i] as f64, vb[i] as f64);
        se += (x - y) * (x - y);
        ae += (x - y).abs();
        sa += x;
        sb += y;
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut vara, mut varb, mut cov) = (0.0, 0.0, 0.0);
    for &i in &idx {
        let (x, y) = (va[i] as f64 - ma, vb[i] as f64 - mb);
        vara += x * x;
        varb += y * y;
        cov += x * y;
    }
    vara /= n;
    varb /= n;
    cov /= n;
    let c1 = (SSIM_K1 * SSIM_DYNAMIC_RANGE_HU).powi(2);
    let c2 = (SSIM_K2 * SSIM_DYNAMIC_RANGE_HU).powi(2);
    let ssim = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
        / ((ma * ma + mb * mb + c1) * (vara + varb + c2));
    Ok(MaskedMetrics {
        rmse_hu: (se / n).sqrt(),
        mae_hu: ae / n,
        ssim,
    })
}
