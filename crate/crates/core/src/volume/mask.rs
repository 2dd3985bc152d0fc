use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{check_dims, coord_of, linear_index, voxel_count, Coord, Dims};
use super::VolumeError;
use crate::seed;

/// Binary voxel mask. A set bit marks the intervention (editable) region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMask {
    dims: Dims,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn empty(dims: Dims) -> Result<Self, VolumeError> {
        check_dims(dims)?;
        Ok(Self {
            dims,
            bits: vec![false; voxel_count(dims)],
        })
    }

    pub fn full(dims: Dims) -> Result<Self, VolumeError> {
        check_dims(dims)?;
        Ok(Self {
            dims,
            bits: vec![true; voxel_count(dims)],
        })
    }

    pub fn from_bits(dims: Dims, bits: Vec<bool>) -> Result<Self, VolumeError> {
        check_dims(dims)?;
        if bits.len() != voxel_count(dims) {
            return Err(VolumeError::LengthMismatch {
                expected: voxel_count(dims),
                got: bits.len(),
            });
        }
        Ok(Self { dims, bits })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(Coord) -> bool) -> Result<Self, VolumeError> {
        check_dims(dims)?;
        let bits = (0..voxel_count(dims)).map(|i| f(coord_of(dims, i))).collect();
        Ok(Self { dims, bits })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, c: Coord) -> bool {
        self.bits[linear_index(self.dims, c)]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn set(&mut self, c: Coord, value: bool) {
        let idx = linear_index(self.dims, c);
        self.bits[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Linear indices of set voxels, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            dims: self.dims,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn intersects(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).any(|(a, b)| *a && *b)
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn union_with(&mut self, other: &RegionMask) -> Result<(), VolumeError> {
        self.ensure_same_dims(other.dims)?;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
        Ok(())
    }

    pub(crate) fn ensure_same_dims(&self, dims: Dims) -> Result<(), VolumeError> {
        if self.dims != dims {
            return Err(VolumeError::DimMismatch {
                expected: self.dims,
                got: dims,
            });
        }
        Ok(())
    }

    /// Inclusive bounding box `(min, max)` of set voxels, `None` when empty.
    pub fn bounding_box(&self) -> Option<(Coord, Coord)> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for idx in self.indices() {
            let c = coord_of(self.dims, idx);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            any = true;
        }
        any.then_some((lo, hi))
    }

    /// Euclidean dilation by `radius` voxels (index space).
    pub fn dilate(&self, radius: usize) -> RegionMask {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as isize;
        let r2 = r * r;
        let mut offsets = Vec::new();
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy + dz * dz <= r2 {
                        offsets.push([dx, dy, dz]);
                    }
                }
            }
        }
        let mut out = vec![false; self.bits.len()];
        for idx in self.indices() {
            let c = coord_of(self.dims, idx);
            for off in &offsets {
                if let Some(n) = offset_coord(self.dims, c, *off) {
                    out[linear_index(self.dims, n)] = true;
                }
            }
        }
        RegionMask {
            dims: self.dims,
            bits: out,
        }
    }

    /// Copy of the sub-block at `origin` with extent `size`.
    pub fn crop(&self, origin: Coord, size: Dims) -> Result<RegionMask, VolumeError> {
        check_dims(size)?;
        for a in 0..3 {
            if origin[a] + size[a] > self.dims[a] {
                return Err(VolumeError::OutOfBounds {
                    coord: origin,
                    dims: self.dims,
                });
            }
        }
        RegionMask::from_fn(size, |c| {
            self.get([c[0] + origin[0], c[1] + origin[1], c[2] + origin[2]])
        })
    }
}

pub(crate) fn offset_coord(dims: Dims, c: Coord, off: [isize; 3]) -> Option<Coord> {
    let mut out = [0usize; 3];
    for a in 0..3 {
        let v = c[a] as isize + off[a];
        if v < 0 || v >= dims[a] as isize {
            return None;
        }
        out[a] = v as usize;
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Malignancy {
    Benign,
    Malignant,
    Unknown,
}

/// A nodule given by its centroid and a nominal radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoduleSpec {
    pub id: String,
    pub center: Coord,
    pub radius_mm: f64,
    #[serde(default = "unknown_malignancy")]
    pub malignancy: Malignancy,
}

fn unknown_malignancy() -> Malignancy {
    Malignancy::Unknown
}

/// Squared physical distance between two voxel centers.
#[inline]
pub(crate) fn dist2_mm(a: Coord, b: Coord, spacing: [f64; 3]) -> f64 {
    (0..3)
        .map(|ax| {
            let d = (a[ax] as f64 - b[ax] as f64) * spacing[ax];
            d * d
        })
        .sum()
}

/// Spherical mask around a nodule centroid, in physical units.
pub fn sphere_mask(
    dims: Dims,
    spacing_mm: [f64; 3],
    spec: &NoduleSpec,
) -> Result<RegionMask, VolumeError> {
    check_dims(dims)?;
    super::grid::check_spacing(spacing_mm)?;
    if spec.center.iter().zip(dims.iter()).any(|(c, d)| c >= d) {
        return Err(VolumeError::OutOfBounds {
            coord: spec.center,
            dims,
        });
    }
    if !(spec.radius_mm >= 0.0 && spec.radius_mm.is_finite()) {
        return Err(VolumeError::InvalidRadius(spec.radius_mm));
    }
    let r2 = spec.radius_mm * spec.radius_mm;
    let mut mask = RegionMask::empty(dims)?;
    // only scan the bounding box of the sphere
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let reach = (spec.radius_mm / spacing_mm[a]).floor() as usize;
        lo[a] = spec.center[a].saturating_sub(reach);
        hi[a] = (spec.center[a] + reach).min(dims[a] - 1);
    }
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                if dist2_mm([i, j, k], spec.center, spacing_mm) <= r2 {
                    mask.set([i, j, k], true);
                }
            }
        }
    }
    Ok(mask)
}

/// Draw from a metaball mask generator: the quantile drawn, the core points
/// and the resulting mask.
#[derive(Clone, Debug)]
pub struct MetaballDraw {
    pub core_points: Vec<[f64; 3]>,
    pub quantile: f64,
    pub mask: RegionMask,
}

/// Procedural training-style mask: summed distance to 4..=7 random core
/// points, thresholded at a random lower-tail quantile in (0, 0.4].
pub fn metaball_mask(dims: Dims, seed: u64) -> Result<RegionMask, VolumeError> {
    metaball_draw(dims, seed).map(|d| d.mask)
}

pub fn metaball_draw(dims: Dims, seed: u64) -> Result<MetaballDraw, VolumeError> {
    if dims.iter().any(|&d| d < 2) {
        return Err(VolumeError::InvalidDims(dims));
    }
    let mut rng = seed::rng(seed);
    let n_cores = rng.random_range(4..=7);
    let core_points: Vec<[f64; 3]> = (0..n_cores)
        .map(|_| {
            [
                rng.random::<f64>() * (dims[0] - 1) as f64,
                rng.random::<f64>() * (dims[1] - 1) as f64,
                rng.random::<f64>() * (dims[2] - 1) as f64,
            ]
        })
        .collect();
    // u in [0, 1) maps onto (0, 0.4]
    let quantile = 0.4 * (1.0 - rng.random::<f64>());

    let scores = metaball_scores(dims, &core_points);
    let total = scores.len();
    let take = ((quantile * total as f64).floor() as usize).max(1);
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut bits = vec![false; total];
    for &idx in &order[..take] {
        bits[idx] = true;
    }
    Ok(MetaballDraw {
        core_points,
        quantile,
        mask: RegionMask::from_bits(dims, bits)?,
    })
}

/// Per-voxel sum of Euclidean distances (voxel units) to the core points.
pub fn metaball_scores(dims: Dims, core_points: &[[f64; 3]]) -> Vec<f64> {
    (0..voxel_count(dims))
        .map(|idx| {
            let c = coord_of(dims, idx);
            core_points
                .iter()
                .map(|p| {
                    let dx = c[0] as f64 - p[0];
                    let dy = c[1] as f64 - p[1];
                    let dz = c[2] as f64 - p[2];
                    (dx * dx + dy * dy + dz * dz).sqrt()
                })
                .sum()
        })
        .collect()
}

/// Lobe classes of a lung segmentation, encoded 0..=5 on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lobe {
    None,
    LeftUpper,
    LeftLower,
    RightUpper,
    RightMiddle,
    RightLower,
}

impl Lobe {
    pub const ALL: [Lobe; 6] = [
        Lobe::None,
        Lobe::LeftUpper,
        Lobe::LeftLower,
        Lobe::RightUpper,
        Lobe::RightMiddle,
        Lobe::RightLower,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Lobe> {
        Lobe::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Lobe::None => "none",
            Lobe::LeftUpper => "left-upper",
            Lobe::LeftLower => "left-lower",
            Lobe::RightUpper => "right-upper",
            Lobe::RightMiddle => "right-middle",
            Lobe::RightLower => "right-lower",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LobeLabelMap {
    dims: Dims,
    labels: Vec<Lobe>,
}

impl LobeLabelMap {
    pub fn new(dims: Dims, labels: Vec<Lobe>) -> Result<Self, VolumeError> {
        check_dims(dims)?;
        if labels.len() != voxel_count(dims) {
            return Err(VolumeError::LengthMismatch {
                expected: voxel_count(dims),
                got: labels.len(),
            });
        }
        Ok(Self { dims, labels })
    }

    pub fn from_codes(dims: Dims, codes: &[u8]) -> Result<Self, VolumeError> {
        let labels = codes
            .iter()
            .map(|&c| Lobe::from_code(c).ok_or(VolumeError::InvalidLabel(c)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dims, labels)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &[Lobe] {
        &self.labels
    }

    pub fn get(&self, c: Coord) -> Lobe {
        self.labels[linear_index(self.dims, c)]
    }

    /// Mask of all voxels carrying any lobe label.
    pub fn lung_mask(&self) -> RegionMask {
        RegionMask {
            dims: self.dims,
            bits: self.labels.iter().map(|&l| l != Lobe::None).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodule(center: Coord, r: f64) -> NoduleSpec {
        NoduleSpec {
            id: "n".into(),
            center,
            radius_mm: r,
            malignancy: Malignancy::Unknown,
        }
    }

    #[test]
    fn zero_radius_is_single_voxel() {
        let m = sphere_mask([7, 7, 7], [1.0; 3], &nodule([3, 2, 5], 0.0)).unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get([3, 2, 5]));
    }

    #[test]
    fn sphere_count_matches_lattice_enumeration() {
        let m = sphere_mask([21, 21, 21], [1.0; 3], &nodule([10, 10, 10], 5.0)).unwrap();
        let mut expected = 0;
        for x in -5i32..=5 {
            for y in -5i32..=5 {
                for z in -5i32..=5 {
                    if x * x + y * y + z * z <= 25 {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(m.count(), expected);
        assert_eq!(expected, 515);
    }

    #[test]
    fn sphere_reflection_symmetric() {
        let dims = [15, 15, 15];
        let c = [7, 7, 7];
        let m = sphere_mask(dims, [1.0; 3], &nodule(c, 4.3)).unwrap();
        for idx in 0..voxel_count(dims) {
            let p = coord_of(dims, idx);
            let q = [2 * c[0] - p[0], 2 * c[1] - p[1], 2 * c[2] - p[2]];
            assert_eq!(m.get(p), m.get(q));
        }
    }

    #[test]
    fn sphere_out_of_bounds() {
        assert!(matches!(
            sphere_mask([4, 4, 4], [1.0; 3], &nodule([4, 0, 0], 1.0)),
            Err(VolumeError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn anisotropic_sphere() {
        // 2 mm z-spacing: radius 2 mm reaches one slice up and down only
        let m = sphere_mask([9, 9, 9], [1.0, 1.0, 2.0], &nodule([4, 4, 4], 2.0)).unwrap();
        assert!(m.get([4, 4, 5]));
        assert!(!m.get([4, 4, 6]));
        assert!(m.get([6, 4, 4]));
    }

    #[test]
    fn metaball_deterministic_and_bounded() {
        let a = metaball_draw([10, 10, 10], 42).unwrap();
        let b = metaball_draw([10, 10, 10], 42).unwrap();
        assert_eq!(a.mask, b.mask);
        let frac = a.mask.count() as f64 / 1000.0;
        assert!(frac > 0.0 && frac <= 0.4);
        assert!((4..=7).contains(&a.core_points.len()));
        assert!(metaball_mask([1, 4, 4], 0).is_err());
    }

    #[test]
    fn metaball_fraction_tracks_quantile() {
        for seed in 0..50 {
            let d = metaball_draw([9, 8, 7], seed).unwrap();
            let total = 9.0 * 8.0 * 7.0;
            assert!((d.mask.count() as f64 - d.quantile * total).abs() <= 1.0);
            // lower tail: every masked score is <= every unmasked score
            let scores = metaball_scores([9, 8, 7], &d.core_points);
            let max_in = d
                .mask
                .indices()
                .iter()
                .map(|&i| scores[i])
                .fold(f64::MIN, f64::max);
            let min_out = d
                .mask
                .complement()
                .indices()
                .iter()
                .map(|&i| scores[i])
                .fold(f64::MAX, f64::min);
            assert!(max_in <= min_out);
        }
    }

    #[test]
    fn dilation_grows_and_clips() {
        let mut m = RegionMask::empty([5, 5, 5]).unwrap();
        m.set([0, 0, 0], true);
        let d = m.dilate(1);
        assert_eq!(d.count(), 4);
        assert!(m.is_subset_of(&d));
    }

    #[test]
    fn lobe_codes() {
        for l in Lobe::ALL {
            assert_eq!(Lobe::from_code(l.code()), Some(l));
        }
        assert!(LobeLabelMap::from_codes([1, 1, 1], &[6]).is_err());
    }
}
