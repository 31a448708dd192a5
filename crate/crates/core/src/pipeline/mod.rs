//! End-to-end orchestration: synthetic corpus generation, feature
//! extraction, observation filtering, the separate/combined regression
//! experiments, the classifier sweep and report rendering.

pub mod config;
pub mod experiment;
pub mod extract;
pub mod filter;
pub mod report;
pub mod store;
pub mod synth;

use std::path::PathBuf;

use thiserror::Error;

use crate::classify::ClassifyError;
use crate::ecg_hr::EcgError;
use crate::features::FeatureError;
use crate::signal_io::SignalIoError;
use crate::stats::StatsError;

pub use config::{FilterWindow, PipelineConfig};
pub use experiment::{
    classifier_sweep, compare_experiments, evaluate, general_model_score, run_experiment_combined,
    run_experiment_separate, CellKey, ClassifierMatrix, ComparisonRow, EvaluationReport, SeparateRow,
};
pub use extract::{extract, read_features, write_features, FeatureRow};
pub use filter::{filter_observations, RejectReason};
pub use report::{render_report, round_half_up};
pub use store::{ModelRecord, ModelStore};
pub use synth::{generate_synthetic_corpus, LedgerEntry, LinePlan, SynthSpec};

/// Process exit codes for the command-line front end.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const DATA: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Signal(#[from] SignalIoError),
    #[error(transparent)]
    Ecg(#[from] EcgError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("cell {0} has too few observations: {1}")]
    CellTooSmall(CellKey, String),
    #[error("subject {0} has too few observations: {1}")]
    SubjectTooSmall(String, String),
    #[error("experiment outputs cover different subjects: {0}")]
    SubjectMismatch(String),
    #[error("score inputs must lie in [0, 100], got {0}")]
    OutOfRange(f64),
    #[error("feature distance targeting failed: {0}")]
    ConvergenceFailure(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed data in {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) | PipelineError::OutOfRange(_) => exit_code::VALIDATION,
            PipelineError::ConvergenceFailure(_) => exit_code::CONVERGENCE,
            PipelineError::Ecg(EcgError::InvalidConfig(_)) | PipelineError::Feature(FeatureError::InvalidConfig(_)) => {
                exit_code::VALIDATION
            }
            _ => exit_code::DATA,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }
}

/// SplitMix64 finaliser; used to derive independent, order-free seeds.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for a keyed sub-stream.
pub(crate) fn derive_seed(seed: u64, key: &str) -> u64 {
    // FNV-1a over the key, then mixed with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix64(seed ^ mix64(h))
}
