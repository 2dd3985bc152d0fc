use serde::{Deserialize, Serialize};

use super::VolumeError;

/// Voxel counts along x, y and z.
pub type Dims = [usize; 3];

/// Integer voxel coordinate `(i, j, k)`.
pub type Coord = [usize; 3];

/// Number of voxels in a grid of the given dimensions.
pub fn voxel_count(dims: Dims) -> usize {
    dims[0] * dims[1] * dims[2]
}

/// Linear index of `(i, j, k)` in x-fastest order.
#[inline]
pub fn linear_index(dims: Dims, c: Coord) -> usize {
    c[0] + dims[0] * (c[1] + dims[1] * c[2])
}

/// Inverse of [`linear_index`].
#[inline]
pub fn coord_of(dims: Dims, idx: usize) -> Coord {
    let i = idx % dims[0];
    let rest = idx / dims[0];
    [i, rest % dims[1], rest / dims[1]]
}

pub(crate) fn check_dims(dims: Dims) -> Result<(), VolumeError> {
    if dims.contains(&0) {
        return Err(VolumeError::InvalidDims(dims));
    }
    Ok(())
}

pub(crate) fn check_spacing(spacing: [f64; 3]) -> Result<(), VolumeError> {
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(VolumeError::InvalidSpacing(spacing));
    }
    Ok(())
}

/// A scalar CT field in Hounsfield units on a regular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrid {
    dims: Dims,
    spacing_mm: [f64; 3],
    voxels: Vec<f32>,
}

impl VolumeGrid {
    pub fn new(dims: Dims, spacing_mm: [f64; 3], voxels: Vec<f32>) -> Result<Self, VolumeError> {
        check_dims(dims)?;
        check_spacing(spacing_mm)?;
        if voxels.len() != voxel_count(dims) {
            return Err(VolumeError::LengthMismatch {
                expected: voxel_count(dims),
                got: voxels.len(),
            });
        }
        if let Some(idx) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(VolumeError::NonFinite(idx));
        }
        Ok(Self {
            dims,
            spacing_mm,
            voxels,
        })
    }

    /// Grid filled with a constant value.
    pub fn filled(dims: Dims, spacing_mm: [f64; 3], value: f32) -> Result<Self, VolumeError> {
        check_dims(dims)?;
        Self::new(dims, spacing_mm, vec![value; voxel_count(dims)])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing_mm(&self) -> [f64; 3] {
        self.spacing_mm
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [f32] {
        &mut self.voxels
    }

    pub fn into_voxels(self) -> Vec<f32> {
        self.voxels
    }

    pub fn get(&self, c: Coord) -> f32 {
        self.voxels[linear_index(self.dims, c)]
    }

    pub fn set(&mut self, c: Coord, value: f32) {
        let idx = linear_index(self.dims, c);
        self.voxels[idx] = value;
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.iter().zip(self.dims.iter()).all(|(a, d)| a < d)
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

    /// Copy out the sub-block starting at `origin` with extent `size`.
    pub fn crop(&self, origin: Coord, size: Dims) -> Result<VolumeGrid, VolumeError> {
        check_dims(size)?;
        for a in 0..3 {
            if origin[a] + size[a] > self.dims[a] {
                return Err(VolumeError::OutOfBounds {
                    coord: origin,
                    dims: self.dims,
                });
            }
        }
        let mut out = Vec::with_capacity(voxel_count(size));
        for k in 0..size[2] {
            for j in 0..size[1] {
                let start = linear_index(self.dims, [origin[0], origin[1] + j, origin[2] + k]);
                out.extend_from_slice(&self.voxels[start..start + size[0]]);
            }
        }
        VolumeGrid::new(size, self.spacing_mm, out)
    }

    /// Write `block` back at `origin`; the inverse of [`VolumeGrid::crop`].
    pub fn paste(&mut self, origin: Coord, block: &VolumeGrid) -> Result<(), VolumeError> {
        let size = block.dims();
        for a in 0..3 {
            if origin[a] + size[a] > self.dims[a] {
                return Err(VolumeError::OutOfBounds {
                    coord: origin,
                    dims: self.dims,
                });
            }
        }
        for k in 0..size[2] {
            for j in 0..size[1] {
                let dst = linear_index(self.dims, [origin[0], origin[1] + j, origin[2] + k]);
                let src = linear_index(size, [0, j, k]);
                self.voxels[dst..dst + size[0]].copy_from_slice(&block.voxels[src..src + size[0]]);
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.voxels.iter().map(|&v| v as f64).sum::<f64>() / self.voxels.len() as f64
    }
}
