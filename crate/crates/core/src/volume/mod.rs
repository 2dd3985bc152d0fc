//! Volume and mask primitives.
//!
//! Grids are stored x-fastest (`i + nx * (j + ny * k)`), which is also the
//! byte order of every payload written by [`io`].

mod grid;
pub mod io;
mod mask;
mod ops;

pub use grid::{coord_of, linear_index, voxel_count, Coord, Dims, VolumeGrid};
pub use io::Dtype;
pub use mask::{
    metaball_draw, metaball_mask, metaball_scores, sphere_mask, Lobe, LobeLabelMap, Malignancy,
    MetaballDraw, NoduleSpec, RegionMask,
};
pub use ops::{
    distance_to_boundary, distance_to_boundary_bruteforce, masked_metrics, recompose,
    DistanceField, MaskedMetrics, SSIM_DYNAMIC_RANGE_HU,
};


use thiserror::Error;

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("invalid dimensions {0:?}")]
    InvalidDims(Dims),
    #[error("invalid spacing {0:?}")]
    InvalidSpacing([f64; 3]),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite voxel at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimMismatch { expected: Dims, got: Dims },
    #[error("coordinate {coord:?} outside grid {dims:?}")]
    OutOfBounds { coord: Coord, dims: Dims },
    #[error("invalid radius {0}")]
    InvalidRadius(f64),
    #[error("part masks {0} and {1} overlap")]
    OverlappingMasks(usize, usize),
    #[error("boundary undefined for an empty or full mask")]
    UndefinedBoundary,
    #[error("mask is empty")]
    EmptyMask,
    #[error("invalid label code {0}")]
    InvalidLabel(u8),
    #[error("unexpected dtype {0:?}")]
    WrongDtype(Dtype),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
