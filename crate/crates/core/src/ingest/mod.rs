//! Raw public-dataset tables to the uniform model.

mod ordonez;
mod overlap;
mod table;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::ValidationReport;

pub use ordonez::{
    build_ordonez, ingest_ordonez, sensor_slug, FileWarning, IngestReport, TableReport,
    DEFAULT_RESIDENT,
};
pub use overlap::{resolve_overlaps, resolve_overlaps_with_stats, OverlapStats, MIN_FRAGMENT_MILLIS};
pub use table::{
    parse_interval_file, parse_interval_text, ParseWarning, ParsedTable, RawInterval, Separator,
    TableSchema, END_COLUMN, START_COLUMN,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is empty")]
    EmptyFile(PathBuf),
    #[error("no valid rows in the {0} table")]
    NoValidRows(String),
    #[error("invalid table schema: {0}")]
    InvalidSchema(String),
    #[error("ingested dataset is invalid: {0}")]
    InvalidDataset(ValidationReport),
}
