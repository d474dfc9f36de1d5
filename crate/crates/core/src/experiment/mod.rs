//! Experiment configs, execution and the on-disk run store.
//!
//! A run lives in `<runs root>/<run_id>/`:
//!
//! ```text
//! config.json            the ExperimentConfig
//! status.json            pending / running / done / failed, rewritten after every fold
//! cleaning_report.json   outcome of the cleaning rules
//! folds/<day>.json       full FoldResult, written as each fold completes
//! tree_<day>.txt         rendered tree of that fold
//! summary.json           RunSummary, written once all folds are done
//! ```
//!
//! Every file is written atomically, so readers never see partial JSON.

mod compare;
mod config;
mod runner;
mod store;

use std::path::PathBuf;

use thiserror::Error;

use crate::cleaning::CleaningError;
use crate::evaluation::EvaluationError;
use crate::model::DatasetError;

pub use compare::{compare_runs, ConfigDiff, EventCountsDelta, MetricDelta, RunComparison};
pub use config::ExperimentConfig;
pub use runner::{execute_run, run_experiment};
pub use store::{
    fold_file_name, list_runs, load_fold, load_run, load_tree_text, new_run_id, read_status,
    run_report, tree_file_name, write_atomic, DatasetSource, DatasetStore, FailureReason, LoadedRun,
    RunListing, RunRecord, RunReport, RunStatus, RunWriter, StatusDocument, CLEANING_FILE, CONFIG_FILE,
    FOLDS_DIR, STATUS_FILE, SUMMARY_FILE,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("dataset {0:?} not found")]
    DatasetNotFound(String),
    #[error("run {0:?} not found")]
    RunNotFound(String),
    #[error("run {0:?} has not finished")]
    RunNotDone(String),
    #[error("runs {a} and {b} cannot be compared: {reason}")]
    IncomparableRuns { a: String, b: String, reason: String },
    #[error("corrupt run file {path}: {message}")]
    CorruptRunFile { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Cleaning(#[from] CleaningError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            ExperimentError::InvalidConfig(_) => "InvalidConfig",
            ExperimentError::DatasetNotFound(_) => "DatasetNotFound",
            ExperimentError::RunNotFound(_) => "RunNotFound",
            ExperimentError::RunNotDone(_) => "RunNotDone",
            ExperimentError::IncomparableRuns { .. } => "IncomparableRuns",
            ExperimentError::CorruptRunFile { .. } => "CorruptRunFile",
            ExperimentError::Dataset(_) => "InvalidDataset",
            ExperimentError::Cleaning(CleaningError::UnknownSensorInScope { .. }) => "UnknownSensorInScope",
            ExperimentError::Cleaning(_) => "InvalidConfig",
            ExperimentError::Evaluation(EvaluationError::InsufficientDays { .. }) => "InsufficientDays",
            ExperimentError::Evaluation(EvaluationError::Representation(_)) => "InvalidMask",
            ExperimentError::Evaluation(EvaluationError::Segmentation(_)) => "SegmentationFailed",
            ExperimentError::Evaluation(_) => "EvaluationFailed",
            ExperimentError::Io(_) => "Io",
        }
    }
}
