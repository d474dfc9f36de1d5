use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::{intervals_intersect, Dataset, IDLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyId,
    ForbiddenCharacter,
    DuplicateId,
    ReservedActivityId,
    UnknownSensor,
    UnknownActivity,
    UnknownResident,
    NegativeDuration,
    EmptyAnnotation,
    SensorOverlap,
    AnnotationOverlap,
    Unsorted,
    NonIncreasingId,
}

/// One broken invariant together with the records involved
/// (`event:<id>`, `annotation:<id>`, `sensor:<id>`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub records: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, records: Vec<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            records,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{:?} [{}]: {}", v.kind, v.records.join(", "), v.message)?;
        }
        Ok(())
    }
}

// Ids end up unquoted in CSV cells.
fn has_forbidden_char(id: &str) -> bool {
    id.contains([',', '"', '\n', '\r'])
}

fn check_catalog<'a>(
    report: &mut ValidationReport,
    what: &str,
    ids: impl Iterator<Item = &'a str>,
) -> HashSet<&'a str> {
    let mut seen = HashSet::new();
    for id in ids {
        let tag = format!("{what}:{id}");
        if id.is_empty() {
            report.push(ViolationKind::EmptyId, vec![tag.clone()], format!("empty {what} id"));
        }
        if has_forbidden_char(id) {
            report.push(
                ViolationKind::ForbiddenCharacter,
                vec![tag.clone()],
                format!("{what} id contains a comma, quote or line break"),
            );
        }
        if !seen.insert(id) {
            report.push(ViolationKind::DuplicateId, vec![tag], format!("duplicate {what} id"));
        }
    }
    seen
}

/// Checks every dataset invariant; an empty report means the dataset is valid.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();

    let sensors = check_catalog(
        &mut report,
        "sensor",
        dataset.sensors.iter().map(|s| s.sensor_id.as_str()),
    );
    let activities = check_catalog(
        &mut report,
        "activity",
        dataset.activities.iter().map(|a| a.activity_id.as_str()),
    );
    let residents = check_catalog(
        &mut report,
        "resident",
        dataset.residents.iter().map(String::as_str),
    );
    if activities.contains(IDLE) {
        report.push(
            ViolationKind::ReservedActivityId,
            vec![format!("activity:{IDLE}")],
            "the Idle class is synthetic and may not be catalogued",
        );
    }

    for (i, e) in dataset.events.iter().enumerate() {
        let tag = format!("event:{}", e.event_id);
        if !sensors.contains(e.sensor_id.as_str()) {
            report.push(
                ViolationKind::UnknownSensor,
                vec![tag.clone()],
                format!("unknown sensor {:?}", e.sensor_id),
            );
        }
        if e.end < e.start {
            report.push(ViolationKind::NegativeDuration, vec![tag.clone()], "end before start");
        }
        if i > 0 {
            let prev = &dataset.events[i - 1];
            if (prev.start, prev.end) > (e.start, e.end) {
                report.push(
                    ViolationKind::Unsorted,
                    vec![format!("event:{}", prev.event_id), tag.clone()],
                    "events not in (start, end) order",
                );
            } else if prev.event_id >= e.event_id {
                report.push(
                    ViolationKind::NonIncreasingId,
                    vec![format!("event:{}", prev.event_id), tag],
                    "event ids must increase in chronological order",
                );
            }
        }
    }

    let mut by_sensor: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in dataset.events.iter().enumerate() {
        by_sensor.entry(e.sensor_id.as_str()).or_default().push(i);
    }
    for (sensor, mut idx) in by_sensor {
        idx.sort_by_key(|&i| {
            let e = &dataset.events[i];
            (e.start, e.end, e.event_id)
        });
        let mut reach: Option<usize> = None;
        for i in idx {
            let e = &dataset.events[i];
            if e.end < e.start {
                continue;
            }
            if let Some(r) = reach {
                let prev = &dataset.events[r];
                if intervals_intersect((prev.start, prev.end), (e.start, e.end)) {
                    report.push(
                        ViolationKind::SensorOverlap,
                        vec![format!("event:{}", prev.event_id), format!("event:{}", e.event_id)],
                        format!("events of sensor {sensor:?} overlap"),
                    );
                }
                if e.end > prev.end {
                    reach = Some(i);
                }
            } else {
                reach = Some(i);
            }
        }
    }

    for (i, a) in dataset.annotations.iter().enumerate() {
        let tag = format!("annotation:{}", a.annotation_id);
        if !activities.contains(a.activity_id.as_str()) {
            report.push(
                ViolationKind::UnknownActivity,
                vec![tag.clone()],
                format!("unknown activity {:?}", a.activity_id),
            );
        }
        if !residents.contains(a.resident_id.as_str()) {
            report.push(
                ViolationKind::UnknownResident,
                vec![tag.clone()],
                format!("unknown resident {:?}", a.resident_id),
            );
        }
        if a.end <= a.start {
            report.push(
                ViolationKind::EmptyAnnotation,
                vec![tag.clone()],
                "annotations need a positive duration",
            );
        }
        if i > 0 {
            let prev = &dataset.annotations[i - 1];
            if (prev.start, prev.end) > (a.start, a.end) {
                report.push(
                    ViolationKind::Unsorted,
                    vec![format!("annotation:{}", prev.annotation_id), tag],
                    "annotations not in (start, end) order",
                );
            } else if prev.annotation_id >= a.annotation_id {
                report.push(
                    ViolationKind::NonIncreasingId,
                    vec![format!("annotation:{}", prev.annotation_id), tag],
                    "annotation ids must increase in chronological order",
                );
            }
        }
    }

    let mut by_resident: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, a) in dataset.annotations.iter().enumerate() {
        by_resident.entry(a.resident_id.as_str()).or_default().push(i);
    }
    for (resident, mut idx) in by_resident {
        idx.sort_by_key(|&i| {
            let a = &dataset.annotations[i];
            (a.start, a.end, a.annotation_id)
        });
        let mut reach: Option<usize> = None;
        for i in idx {
            let a = &dataset.annotations[i];
            if a.end <= a.start {
                continue;
            }
            if let Some(r) = reach {
                let prev = &dataset.annotations[r];
                if a.start < prev.end {
                    report.push(
                        ViolationKind::AnnotationOverlap,
                        vec![
                            format!("annotation:{}", prev.annotation_id),
                            format!("annotation:{}", a.annotation_id),
                        ],
                        format!("annotations of resident {resident:?} overlap"),
                    );
                }
                if a.end > prev.end {
                    reach = Some(i);
                }
            } else {
                reach = Some(i);
            }
        }
    }

    report
}
