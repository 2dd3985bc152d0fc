//! Masked diffusion bridge: the editable region is diffused towards a zero
//! endpoint and regenerated by reverse sampling, while every other voxel is
//! carried through untouched.

mod blending;
mod sampler;
mod schedule;
mod score;

pub use blending::{kl_blending_diagnostic, uniform_grid, BlendingCurve, GaussianParams};
pub use sampler::{
    forward_diffuse, insert_region, insertion_site, paste_content, remove_region, reverse_sample,
    BridgeConfig, BridgeSystem, InsertionSite, DEFAULT_NFE, DEFAULT_TAU_FRACTION, INSERT_CROP_SIDE,
    INSERT_DILATION,
};
pub use schedule::{Schedule, DEFAULT_BETA_MAX, DEFAULT_STEPS};
pub use score::{GaussianScore, IidGaussianScore, ScoreFunction, ScoreQuery, GAUSSIAN_MAX_DIM};

use thiserror::Error;

use crate::volume::VolumeError;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("time index {index} outside 0..={steps}")]
    TimeOutOfRange { index: usize, steps: usize },
    #[error("nfe must be at least 1")]
    InvalidNfe,
    #[error("editable mask is empty")]
    EmptyMask,
    #[error("covariance is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("Gaussian prior of dimension {0} is unsupported")]
    PriorSize(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("score failed at step {step}: {message}")]
    Score { step: usize, message: String },
    #[error("score at step {step} has {got} entries, expected {expected}")]
    ScoreShape { step: usize, expected: usize, got: usize },
    #[error("placement: {0}")]
    Placement(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}
