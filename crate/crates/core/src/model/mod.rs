//! Core domain types, the uniform dataset directory format, validation and
//! exploration statistics.

mod io;
mod stats;
mod types;
mod validate;

pub use io::{
    load_uniform, render_uniform, save_uniform, DatasetError, ANNOTATIONS_FILE, EVENTS_FILE,
    META_FILE,
};
pub use stats::{explore_stats, sensor_duration_stats, DurationStats, OverlapMatrix, StatsReport};
pub use types::{
    intervals_intersect, local_midnight, overlap_millis, parse_timezone, ActivityAnnotation, ActivityMeta,
    Dataset, Instant, SensorEvent, SensorMeta, IDLE,
};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};
