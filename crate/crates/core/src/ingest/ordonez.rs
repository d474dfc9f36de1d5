use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::overlap::{resolve_overlaps_with_stats, OverlapStats};
use super::table::{parse_interval_file, ParseWarning, ParsedTable, RawInterval, TableSchema};
use super::IngestError;
use crate::model::{
    validate, ActivityAnnotation, ActivityMeta, Dataset, Instant, SensorEvent, SensorMeta, IDLE,
};

/// The single resident of the Ordonez homes.
pub const DEFAULT_RESIDENT: &str = "R1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_skipped: usize,
    /// Kept rows absorbed into another record (not part of the conservation sum).
    pub rows_merged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileWarning {
    pub file: String,
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub name: String,
    pub sensors: TableReport,
    pub annotations: TableReport,
    pub overlaps: OverlapStats,
    pub sensor_count: usize,
    pub activity_count: usize,
    pub event_count: usize,
    pub annotation_count: usize,
    pub annotated_days: usize,
    pub warnings: Vec<FileWarning>,
}

/// Sensor id for a raw `(location, type, place)` triple.
pub fn sensor_slug(location: &str, kind: &str, place: &str) -> String {
    format!("{location}|{kind}|{place}")
}

fn warn(report: &mut IngestReport, file: &str, w: ParseWarning) {
    report.warnings.push(FileWarning {
        file: file.to_string(),
        row: w.row,
        reason: w.reason,
    });
}

/// Merges same-sensor intervals that overlap or touch. Returns the merged
/// events (unnumbered) and the number of intervals absorbed.
fn merge_sensor_intervals(raw: &[(String, Instant, Instant)]) -> (Vec<(String, Instant, Instant)>, usize) {
    let mut by_sensor: BTreeMap<&str, Vec<(Instant, Instant)>> = BTreeMap::new();
    for (id, s, e) in raw {
        by_sensor.entry(id.as_str()).or_default().push((*s, *e));
    }
    let mut merged = Vec::new();
    let mut absorbed = 0;
    for (id, mut spans) in by_sensor {
        spans.sort();
        let mut current = spans[0];
        for &(s, e) in &spans[1..] {
            if s <= current.1 {
                current.1 = current.1.max(e);
                absorbed += 1;
            } else {
                merged.push((id.to_string(), current.0, current.1));
                current = (s, e);
            }
        }
        merged.push((id.to_string(), current.0, current.1));
    }
    (merged, absorbed)
}

/// Builds a dataset from already parsed Ordonez sensor and activity tables.
pub fn build_ordonez(
    sensors: ParsedTable,
    activities: ParsedTable,
    name: &str,
    tz: Tz,
) -> Result<(Dataset, IngestReport), IngestError> {
    let mut report = IngestReport {
        name: name.to_string(),
        ..Default::default()
    };

    report.sensors.rows_read = sensors.rows_read;
    report.sensors.rows_skipped = sensors.warnings.len();
    for w in sensors.warnings {
        warn(&mut report, "sensors", w);
    }
    let mut catalog: BTreeMap<String, SensorMeta> = BTreeMap::new();
    let mut raw_events = Vec::with_capacity(sensors.intervals.len());
    for RawInterval { start, end, columns, .. } in sensors.intervals {
        let (location, kind, place) = (&columns[0], &columns[1], &columns[2]);
        let id = sensor_slug(location, kind, place);
        catalog.entry(id.clone()).or_insert_with(|| SensorMeta {
            sensor_id: id.clone(),
            label: format!("{location} {kind} {place}"),
            location: Some(place.clone()),
            kind: Some(kind.clone()),
        });
        raw_events.push((id, start, end));
    }
    if raw_events.is_empty() {
        return Err(IngestError::NoValidRows("sensors".into()));
    }
    report.sensors.rows_kept = raw_events.len();
    let (merged, absorbed) = merge_sensor_intervals(&raw_events);
    report.sensors.rows_merged = absorbed;

    let mut merged = merged;
    merged.sort_by(|a, b| (a.1, a.2, &a.0).cmp(&(b.1, b.2, &b.0)));
    let events: Vec<SensorEvent> = merged
        .into_iter()
        .enumerate()
        .map(|(i, (sensor_id, start, end))| SensorEvent {
            event_id: i as u64,
            sensor_id,
            start,
            end,
        })
        .collect();

    report.annotations.rows_read = activities.rows_read;
    for w in activities.warnings {
        report.annotations.rows_skipped += 1;
        warn(&mut report, "annotations", w);
    }
    let mut labels: BTreeSet<String> = BTreeSet::new();
    let mut raw_annotations = Vec::new();
    for RawInterval { row, start, end, columns } in activities.intervals {
        let label = &columns[0];
        let reason = if end <= start {
            Some("zero duration")
        } else if label == IDLE {
            Some("reserved activity label")
        } else {
            None
        };
        if let Some(reason) = reason {
            report.annotations.rows_skipped += 1;
            warn(&mut report, "annotations", ParseWarning { row, reason: reason.into() });
            continue;
        }
        labels.insert(label.clone());
        raw_annotations.push(ActivityAnnotation {
            annotation_id: raw_annotations.len() as u64,
            resident_id: DEFAULT_RESIDENT.to_string(),
            activity_id: label.clone(),
            start,
            end,
        });
    }
    report.annotations.rows_kept = raw_annotations.len();
    let (resolved, overlaps) = resolve_overlaps_with_stats(&raw_annotations);
    report.overlaps = overlaps;
    let annotations = resolved
        .into_iter()
        .enumerate()
        .map(|(i, a)| ActivityAnnotation {
            annotation_id: i as u64,
            ..a
        })
        .collect();

    let dataset = Dataset {
        name: name.to_string(),
        timezone: tz,
        sensors: catalog.into_values().collect(),
        activities: labels
            .into_iter()
            .map(|l| ActivityMeta {
                activity_id: l.clone(),
                label: l.replace('_', " "),
            })
            .collect(),
        residents: vec![DEFAULT_RESIDENT.to_string()],
        events,
        annotations,
    };
    let violations = validate(&dataset);
    if !violations.is_valid() {
        return Err(IngestError::InvalidDataset(violations));
    }

    report.sensor_count = dataset.sensors.len();
    report.activity_count = dataset.activities.len();
    report.event_count = dataset.events.len();
    report.annotation_count = dataset.annotations.len();
    report.annotated_days = dataset.annotated_days().len();
    Ok((dataset, report))
}

/// Ingests an Ordonez-style pair of sensor and activity tables.
pub fn ingest_ordonez(
    sensor_path: impl AsRef<Path>,
    annot_path: impl AsRef<Path>,
    name: &str,
    tz: Tz,
) -> Result<(Dataset, IngestReport), IngestError> {
    let sensors = parse_interval_file(sensor_path, &TableSchema::ordonez_sensors(), &tz)?;
    let activities = parse_interval_file(annot_path, &TableSchema::ordonez_activities(), &tz)?;
    build_ordonez(sensors, activities, name, tz)
}
