//! Insertion sweeps: paste a probe nodule at lattice centers inside the lung,
//! blend it in, and record the change in base-hazard logit at every center.

mod aggregate;
mod output;
mod probe;

pub use aggregate::{aggregate_by_lobe, radial_profile, LobeAggregate, LobeGroup, RadialPoint};
pub use output::{write_csv, write_slices, SliceFile, SliceSidecar};
pub use probe::{lattice_centers, snap_centers, snap_map, snap_probe, InsertionProbe, SnapMap, SnapProber};

use thiserror::Error;

use crate::bridge::BridgeError;
use crate::model::ModelError;
use crate::volume::{Coord, VolumeError};

#[derive(Debug, Error)]
pub enum SnapError {
    #[error("center {0:?} lies outside the lung mask")]
    OutsideLung(Coord),
    #[error("placement: {0}")]
    Placement(String),
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error("stride must be at least 1")]
    InvalidStride,
    #[error("no lattice center could be probed")]
    EmptyMap,
    #[error("center {0:?} has no distance value")]
    NoDistance(Coord),
    #[error("model query at {center:?}: {source}")]
    Model {
        center: Option<Coord>,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Bridge(BridgeError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<BridgeError> for SnapError {
    fn from(e: BridgeError) -> Self {
        match e {
            BridgeError::Placement(m) => SnapError::Placement(m),
            other => SnapError::Bridge(other),
        }
    }
}
