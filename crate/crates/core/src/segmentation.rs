//! Implicit segmentation: one fixed-width window centred on every sensor
//! transition, labelled with the activity that dominates it.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{overlap_millis, ActivityAnnotation, Dataset, Instant, SensorEvent, IDLE};

#[derive(Debug, Error, PartialEq)]
pub enum SegmentationError {
    #[error("dataset has no sensor events")]
    NoEvents,
    #[error("window must be positive, got {0} s")]
    InvalidWindow(f64),
    #[error("unknown resident {0:?}")]
    UnknownResident(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub anchor: Instant,
    pub window_start: Instant,
    pub window_end: Instant,
    pub label: String,
    pub local_day: NaiveDate,
}

/// Sorted, de-duplicated start and end instants of all events.
pub fn anchors(events: &[SensorEvent]) -> Vec<Instant> {
    let mut out: Vec<Instant> = events.iter().flat_map(|e| [e.start, e.end]).collect();
    out.sort();
    out.dedup();
    out
}

/// Window width in milliseconds for a duration in seconds.
pub fn window_millis(window_s: f64) -> Result<i64, SegmentationError> {
    let ms = (window_s * 1000.0).round() as i64;
    if !(window_s > 0.0) || ms <= 0 {
        return Err(SegmentationError::InvalidWindow(window_s));
    }
    Ok(ms)
}

/// The half-open window of width `width_ms` centred on `anchor`.
pub fn centred_window(anchor: Instant, width_ms: i64) -> (Instant, Instant) {
    let start = anchor.add_millis(-(width_ms / 2));
    (start, start.add_millis(width_ms))
}

/// The activity covering most of `window`.
///
/// Idle wins only when the uncovered time strictly exceeds every activity's
/// covered time. Ties between activities go to the smallest id.
/// `annotations` must be pairwise disjoint.
pub fn dominant_activity(annotations: &[ActivityAnnotation], window: (Instant, Instant)) -> String {
    let mut covered: BTreeMap<&str, i64> = BTreeMap::new();
    for a in annotations {
        let ov = overlap_millis((a.start, a.end), window);
        if ov > 0 {
            *covered.entry(a.activity_id.as_str()).or_default() += ov;
        }
    }
    dominant_from_coverage(&covered, window.1.millis() - window.0.millis())
}

fn dominant_from_coverage(covered: &BTreeMap<&str, i64>, width_ms: i64) -> String {
    let total: i64 = covered.values().sum();
    let uncovered = width_ms - total;
    // BTreeMap iterates ids in ascending order, so the first maximum is the smallest id
    let best = covered
        .iter()
        .fold(None::<(&str, i64)>, |best, (&id, &ms)| match best {
            Some((_, b)) if b >= ms => best,
            _ => Some((id, ms)),
        });
    match best {
        Some((id, ms)) if ms >= uncovered => id.to_string(),
        _ => IDLE.to_string(),
    }
}

/// Segments a dataset for one resident.
pub fn segments(
    dataset: &Dataset,
    window_s: f64,
    resident_id: &str,
) -> Result<Vec<Segment>, SegmentationError> {
    let width = window_millis(window_s)?;
    if !dataset.residents.iter().any(|r| r == resident_id) {
        return Err(SegmentationError::UnknownResident(resident_id.to_string()));
    }
    if dataset.events.is_empty() {
        return Err(SegmentationError::NoEvents);
    }
    let mut annotations = dataset.resident_annotations(resident_id);
    annotations.sort_by_key(|a| (a.start, a.end));

    Ok(anchors(&dataset.events)
        .into_iter()
        .map(|anchor| {
            let window = centred_window(anchor, width);
            // disjoint and start-sorted, so ends are sorted too
            let first = annotations.partition_point(|a| a.end <= window.0);
            let last = annotations.partition_point(|a| a.start < window.1);
            let label = dominant_activity(&annotations[first..last.max(first)], window);
            Segment {
                anchor,
                window_start: window.0,
                window_end: window.1,
                label,
                local_day: anchor.local_date(&dataset.timezone),
            }
        })
        .collect())
}
