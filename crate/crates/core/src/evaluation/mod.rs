//! Preceding-days leave-one-day-out cross-validation, classification scores
//! and event-level temporal error analysis.

mod cv;
mod events;
mod folds;
mod scores;

use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::representation::RepresentationError;
use crate::segmentation::SegmentationError;

pub use cv::{
    evaluate_cv, Aggregate, CvOutcome, FoldProgress, FoldResult, FoldScore, NoProgress,
    ProgressSink, RunSummary,
};
pub use events::{build_timeline, event_error_analysis, EventCounts, EventErrorReport, Timeline};
pub use folds::{make_folds, Fold};
pub use scores::{confusion_and_scores, ClassScore, ConfusionMatrix, ScoreSet};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("truth has {truth} entries but predictions have {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("label {0:?} is not among the evaluated classes")]
    UnknownClass(String),
    #[error("no segments")]
    EmptySegments,
    #[error("timeline resolution must be positive, got {0} s")]
    InvalidResolution(f64),
    #[error("span mismatch: {0}")]
    SpanMismatch(String),
    #[error("{days} instance-bearing day(s) cannot form a fold with min_train_days={min_train_days}")]
    InsufficientDays { days: usize, min_train_days: usize },
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("progress sink failed: {0}")]
    Sink(String),
}
