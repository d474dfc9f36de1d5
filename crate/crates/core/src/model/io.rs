//! The uniform on-disk dataset layout.
//!
//! A dataset directory holds three files:
//!
//! - `dataset.meta`: JSON with `name`, `timezone`, `sensors`, `activities`, `residents`
//! - `events.csv`: `event_id,sensor_id,start,end`
//! - `annotations.csv`: `annotation_id,resident_id,activity_id,start,end`
//!
//! Files are UTF-8 with `\n` line endings and timestamps rendered as
//! `YYYY-MM-DDTHH:MM:SS.mmmZ`. Saving is canonical, so saving a loaded
//! dataset reproduces the files byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{
    parse_timezone, ActivityAnnotation, ActivityMeta, Dataset, Instant, SensorEvent, SensorMeta,
};
use super::validate::{validate, ValidationReport};

pub const META_FILE: &str = "dataset.meta";
pub const EVENTS_FILE: &str = "events.csv";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";

const EVENTS_HEADER: &str = "event_id,sensor_id,start,end";
const ANNOTATIONS_HEADER: &str = "annotation_id,resident_id,activity_id,start,end";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    /// `row` counts data rows from 1; the header is row 0.
    #[error("{file}: malformed row {row}: {reason}")]
    MalformedRow {
        file: String,
        row: usize,
        reason: String,
    },
    #[error("invalid dataset: {0}")]
    InvariantViolation(ValidationReport),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    pub fn malformed_row(&self) -> Option<usize> {
        match self {
            DatasetError::MalformedRow { row, .. } => Some(*row),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaDocument {
    name: String,
    timezone: String,
    sensors: Vec<SensorMeta>,
    activities: Vec<ActivityMeta>,
    residents: Vec<String>,
}

fn read_required(path: &Path) -> Result<String, DatasetError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(DatasetError::MissingFile(path.to_path_buf()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Yields `(row_number, fields)` for each data row after checking the header.
fn csv_rows<'a>(
    file: &'a str,
    text: &'a str,
    header: &'a str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)> + 'a, DatasetError> {
    let mut lines = text.split('\n');
    let first = lines.next().unwrap_or("");
    if first != header {
        return Err(DatasetError::MalformedRow {
            file: file.to_string(),
            row: 0,
            reason: format!("expected header {header:?}, found {first:?}"),
        });
    }
    Ok(lines
        .enumerate()
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| (i + 1, line.split(',').collect())))
}

fn parse_field<T: std::str::FromStr>(
    file: &str,
    row: usize,
    column: &str,
    raw: &str,
) -> Result<T, DatasetError> {
    raw.parse().map_err(|_| DatasetError::MalformedRow {
        file: file.to_string(),
        row,
        reason: format!("bad {column} {raw:?}"),
    })
}

fn parse_instant(file: &str, row: usize, raw: &str) -> Result<Instant, DatasetError> {
    Instant::parse_rfc3339(raw).map_err(|reason| DatasetError::MalformedRow {
        file: file.to_string(),
        row,
        reason,
    })
}

fn check_arity(file: &str, row: usize, fields: &[&str], want: usize) -> Result<(), DatasetError> {
    if fields.len() != want {
        return Err(DatasetError::MalformedRow {
            file: file.to_string(),
            row,
            reason: format!("expected {want} columns, found {}", fields.len()),
        });
    }
    Ok(())
}

fn parse_events(text: &str) -> Result<Vec<SensorEvent>, DatasetError> {
    let mut events = Vec::new();
    for (row, f) in csv_rows(EVENTS_FILE, text, EVENTS_HEADER)? {
        check_arity(EVENTS_FILE, row, &f, 4)?;
        let event = SensorEvent {
            event_id: parse_field(EVENTS_FILE, row, "event_id", f[0])?,
            sensor_id: f[1].to_string(),
            start: parse_instant(EVENTS_FILE, row, f[2])?,
            end: parse_instant(EVENTS_FILE, row, f[3])?,
        };
        if event.end < event.start {
            return Err(DatasetError::MalformedRow {
                file: EVENTS_FILE.to_string(),
                row,
                reason: "end before start".into(),
            });
        }
        events.push(event);
    }
    Ok(events)
}

fn parse_annotations(text: &str) -> Result<Vec<ActivityAnnotation>, DatasetError> {
    let mut annotations = Vec::new();
    for (row, f) in csv_rows(ANNOTATIONS_FILE, text, ANNOTATIONS_HEADER)? {
        check_arity(ANNOTATIONS_FILE, row, &f, 5)?;
        let annotation = ActivityAnnotation {
            annotation_id: parse_field(ANNOTATIONS_FILE, row, "annotation_id", f[0])?,
            resident_id: f[1].to_string(),
            activity_id: f[2].to_string(),
            start: parse_instant(ANNOTATIONS_FILE, row, f[3])?,
            end: parse_instant(ANNOTATIONS_FILE, row, f[4])?,
        };
        if annotation.end <= annotation.start {
            return Err(DatasetError::MalformedRow {
                file: ANNOTATIONS_FILE.to_string(),
                row,
                reason: "annotation end not after start".into(),
            });
        }
        annotations.push(annotation);
    }
    Ok(annotations)
}

/// Loads and validates a uniform dataset directory.
pub fn load_uniform(dir: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let dir = dir.as_ref();
    let meta_text = read_required(&dir.join(META_FILE))?;
    let events_text = read_required(&dir.join(EVENTS_FILE))?;
    let annotations_text = read_required(&dir.join(ANNOTATIONS_FILE))?;

    let meta: MetaDocument =
        serde_json::from_str(&meta_text).map_err(|e| DatasetError::MalformedRow {
            file: META_FILE.to_string(),
            row: e.line(),
            reason: e.to_string(),
        })?;
    let timezone = parse_timezone(&meta.timezone).map_err(|reason| DatasetError::MalformedRow {
        file: META_FILE.to_string(),
        row: 0,
        reason,
    })?;

    let dataset = Dataset {
        name: meta.name,
        timezone,
        sensors: meta.sensors,
        activities: meta.activities,
        residents: meta.residents,
        events: parse_events(&events_text)?,
        annotations: parse_annotations(&annotations_text)?,
    };
    let report = validate(&dataset);
    if !report.is_valid() {
        return Err(DatasetError::InvariantViolation(report));
    }
    Ok(dataset)
}

/// Renders the three canonical files as `(file name, contents)`.
pub fn render_uniform(dataset: &Dataset) -> Vec<(&'static str, String)> {
    let canonical = dataset.clone().canonicalized();
    let meta = MetaDocument {
        name: canonical.name.clone(),
        timezone: canonical.timezone.name().to_string(),
        sensors: canonical.sensors.clone(),
        activities: canonical.activities.clone(),
        residents: canonical.residents.clone(),
    };
    let mut meta_text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    meta_text.push('\n');

    let mut events = String::from(EVENTS_HEADER);
    events.push('\n');
    for e in &canonical.events {
        events.push_str(&format!("{},{},{},{}\n", e.event_id, e.sensor_id, e.start, e.end));
    }

    let mut annotations = String::from(ANNOTATIONS_HEADER);
    annotations.push('\n');
    for a in &canonical.annotations {
        annotations.push_str(&format!(
            "{},{},{},{},{}\n",
            a.annotation_id, a.resident_id, a.activity_id, a.start, a.end
        ));
    }

    vec![
        (META_FILE, meta_text),
        (EVENTS_FILE, events),
        (ANNOTATIONS_FILE, annotations),
    ]
}

/// Writes the canonical form of `dataset` into `dir`, creating it if needed.
pub fn save_uniform(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (name, contents) in render_uniform(dataset) {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
