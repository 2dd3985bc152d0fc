//! Black-box risk models: the output contract, transports, and a toy model
//! whose logit is exactly linear-with-pairwise-interactions in its sites.

mod handle;
mod output;
pub mod server;
mod toy;

pub use handle::{ModelHandle, RiskModel, TransportSpec, DEFAULT_TIMEOUT};
pub use output::{risk_correlation, sigmoid, RiskOutput, WireResponse, N_RISKS};
pub use server::{serve_stdio, ToyHttpServer};
pub use toy::{toy_activation, toy_model_eval, ToyLmpiModelSpec, ToySite, DEFAULT_DETECT_THRESHOLD_HU};

use thiserror::Error;

use crate::volume::VolumeError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("model query timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("model reported an error: {0}")]
    Remote(String),
    #[error("invalid toy model spec: {0}")]
    InvalidSpec(String),
    #[error("need at least 3 outputs, got {0}")]
    TooFewOutputs(usize),
    #[error("risk column {0} is constant")]
    UndefinedCorrelation(usize),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
