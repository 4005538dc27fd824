//! Experiment runner for `revsim-core`.
//!
//! Every experiment expands a JSON config and a master seed into a list of
//! independent jobs, runs them in parallel, and writes `results.csv` plus a
//! `meta.json` describing the run. Each row carries the config hash and the
//! seed of the job that produced it, so [`output::verify`] can regenerate
//! any row and compare it byte for byte.

pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use experiments::{Experiment, ExperimentKind};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0} already exists; results are never overwritten")]
    Exists(PathBuf),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("row {row} does not regenerate: {detail}")]
    Mismatch { row: usize, detail: String },
    #[error("config hash {found} in meta.json does not match its config ({expected})")]
    HashMismatch { expected: String, found: String },
    #[error(transparent)]
    Selection(#[from] revsim_core::selection::SelectionError),
    #[error(transparent)]
    Channel(#[from] revsim_core::channel::ChannelError),
    #[error(transparent)]
    Capacity(#[from] revsim_core::capacity::CapacityError),
    #[error(transparent)]
    Rpn(#[from] revsim_core::rpn::RpnError),
    #[error(transparent)]
    Lattice(#[from] revsim_core::lattice::LatticeError),
    #[error(transparent)]
    Erasure(#[from] revsim_core::erasure::ErasureError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
