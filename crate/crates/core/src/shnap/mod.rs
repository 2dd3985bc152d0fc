//! Region-coalition attribution: remove every region once, rebuild all
//! coalitions by reinserting original content, score them, and project the
//! resulting game onto main and pairwise effects.

mod explain;
mod removal;
mod stability;

pub use explain::{
    rnc, shnap_explain, shnap_run, shnap_runs, AuditCase, Region, RunResult, ShnapExplanation, ShnapReport,
    SHNAP_ORDER,
};
pub use removal::{BridgeRemover, CountingRemover, FillRemover, NaiveBaseline, RegionRemover};
pub use stability::{
    naive_baseline_explanations, stability_protocol, stability_report, CoefficientStd, StabilityComparison,
    StabilityReport,
};

use thiserror::Error;

use crate::coalition::CoalitionError;
use crate::volume::VolumeError;

#[derive(Debug, Error)]
pub enum ShnapError {
    #[error("invalid audit case: {0}")]
    InvalidCase(String),
    #[error("removing region {region}: {message}")]
    Removal { region: usize, message: String },
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("explanations differ in structure: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Coalition(#[from] CoalitionError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}
