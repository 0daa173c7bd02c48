//! Experiment orchestration: configuration, the seeded training loop,
//! metrics, checkpoints, evaluation, ablations and the causal probe.

mod checkpoint;
mod config;
mod experiments;
mod metrics;
mod probe;
mod trainer;

pub use checkpoint::{ArrayData, Checkpoint, NamedArray, FORMAT_VERSION};
pub use config::{Ablation, Algorithm, TaskKind, TrainConfig};
pub use experiments::{
    evaluate, run_ablation_no_intervention, run_alpha_sweep, run_training, AblationReport,
    EvalStats, RunRecord, SweepArm, SweepSummary, ALPHA_SWEEP, CHECKPOINT_FILE, CONFIG_FILE,
    FAILURE_FILE, MANIFEST_FILE, METRICS_FILE,
};
pub use metrics::{header, read_metrics, trailing_mean, EpisodeRow, MetricsWriter, METRICS_SCHEMA_VERSION};
pub use probe::{run_probe, Behavior, ProbeConfig, ProbeResult};
pub use trainer::Trainer;

use crate::env::EnvError;
use crate::maddpg::MaddpgError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Learner(#[from] MaddpgError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("metrics error: {0}")]
    Metrics(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("unsupported checkpoint format version {0}")]
    CheckpointVersion(u32),
    #[error("checkpoint does not match this configuration: {0}")]
    CheckpointMismatch(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Metrics(e.to_string())
    }
}

impl From<crate::causal::CausalError> for HarnessError {
    fn from(e: crate::causal::CausalError) -> Self {
        HarnessError::Learner(e.into())
    }
}

impl From<crate::dynamics::DynamicsError> for HarnessError {
    fn from(e: crate::dynamics::DynamicsError) -> Self {
        HarnessError::Learner(crate::causal::CausalError::from(e).into())
    }
}
