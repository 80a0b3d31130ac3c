use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("step called on a finished game")]
    StepAfterDone,

    #[error("invalid state override: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("trace was produced by a different network version (trace {trace}, network {network})")]
    StaleTrace { trace: u64, network: u64 },

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("non-finite loss during update: {0}")]
    NonFiniteLoss(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("only {found} frames survived filtering, {needed} required")]
    InsufficientFrames { found: usize, needed: usize },

    #[error("found only {found} of {needed} trajectories within the attempt budget")]
    TrajectoryBudget { found: usize, needed: usize },

    #[error("agent {agent}: interaction matrix has zero variance")]
    ZeroVariance { agent: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
