//! Rule-based filtering of the sensor event stream.
//!
//! Rules are plain data so they can be stored in an experiment config and
//! toggled from the UI:
//!
//! ```json
//! [{"kind": "drop_short", "sensors": "all", "threshold_s": 2.0},
//!  {"kind": "merge_gap", "sensors": ["Door|Magnetic|Kitchen"], "threshold_s": 5.0}]
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{sensor_duration_stats, Dataset, DurationStats, SensorEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Remove activations shorter than the threshold.
    DropShort,
    /// Truncate activations longer than the threshold, keeping their start.
    ClipLong,
    /// Join consecutive activations of one sensor separated by less than the threshold.
    MergeGap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SensorScope {
    All(AllSensors),
    Only(BTreeSet<String>),
}

/// The literal string `"all"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllSensors {
    All,
}

impl SensorScope {
    pub fn all() -> Self {
        SensorScope::All(AllSensors::All)
    }

    pub fn only<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        SensorScope::Only(ids.into_iter().map(Into::into).collect())
    }

    fn contains(&self, sensor_id: &str) -> bool {
        match self {
            SensorScope::All(_) => true,
            SensorScope::Only(ids) => ids.contains(sensor_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningRule {
    pub kind: RuleKind,
    #[serde(rename = "sensors")]
    pub sensor_scope: SensorScope,
    pub threshold_s: f64,
}

impl CleaningRule {
    pub fn new(kind: RuleKind, sensor_scope: SensorScope, threshold_s: f64) -> Self {
        CleaningRule { kind, sensor_scope, threshold_s }
    }

    fn threshold_millis(&self) -> i64 {
        (self.threshold_s * 1000.0).round() as i64
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CleaningError {
    #[error("rule {rule}: unknown sensor {sensor:?} in scope")]
    UnknownSensorInScope { rule: usize, sensor: String },
    #[error("rule {rule}: threshold must be positive, got {threshold_s}")]
    NonPositiveThreshold { rule: usize, threshold_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub kind: RuleKind,
    pub threshold_s: f64,
    pub events_removed: usize,
    pub events_modified: usize,
    pub events_merged: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rules: Vec<RuleOutcome>,
    pub events_before: usize,
    pub events_after: usize,
    pub sensor_stats_before: BTreeMap<String, DurationStats>,
    pub sensor_stats_after: BTreeMap<String, DurationStats>,
}

impl CleaningReport {
    pub fn total_removed(&self) -> usize {
        self.rules.iter().map(|r| r.events_removed).sum()
    }

    pub fn total_merged(&self) -> usize {
        self.rules.iter().map(|r| r.events_merged).sum()
    }
}

fn apply_rule(events: Vec<SensorEvent>, rule: &CleaningRule) -> (Vec<SensorEvent>, RuleOutcome) {
    let threshold = rule.threshold_millis();
    let mut outcome = RuleOutcome {
        kind: rule.kind,
        threshold_s: rule.threshold_s,
        events_removed: 0,
        events_modified: 0,
        events_merged: 0,
    };
    let out = match rule.kind {
        RuleKind::DropShort => events
            .into_iter()
            .filter(|e| {
                let drop = rule.sensor_scope.contains(&e.sensor_id) && e.duration_millis() < threshold;
                outcome.events_removed += drop as usize;
                !drop
            })
            .collect(),
        RuleKind::ClipLong => events
            .into_iter()
            .map(|mut e| {
                if rule.sensor_scope.contains(&e.sensor_id) && e.duration_millis() > threshold {
                    e.end = e.start.add_millis(threshold);
                    outcome.events_modified += 1;
                }
                e
            })
            .collect(),
        RuleKind::MergeGap => {
            let mut by_sensor: BTreeMap<String, Vec<SensorEvent>> = BTreeMap::new();
            for e in events {
                by_sensor.entry(e.sensor_id.clone()).or_default().push(e);
            }
            let mut out = Vec::new();
            for (sensor, mut list) in by_sensor {
                if !rule.sensor_scope.contains(&sensor) {
                    out.extend(list);
                    continue;
                }
                list.sort_by_key(|e| (e.start, e.end, e.event_id));
                let mut iter = list.into_iter();
                let mut current = iter.next().expect("non-empty group");
                for e in iter {
                    if e.start.millis() - current.end.millis() < threshold {
                        current.end = current.end.max(e.end);
                        outcome.events_merged += 1;
                    } else {
                        out.push(std::mem::replace(&mut current, e));
                    }
                }
                out.push(current);
            }
            out
        }
    };
    (out, outcome)
}

/// Applies `rules` in order and returns the cleaned, re-numbered event list.
pub fn apply_rules(
    events: &[SensorEvent],
    rules: &[CleaningRule],
    known_sensors: &BTreeSet<String>,
) -> Result<(Vec<SensorEvent>, CleaningReport), CleaningError> {
    for (i, rule) in rules.iter().enumerate() {
        if !(rule.threshold_s > 0.0) {
            return Err(CleaningError::NonPositiveThreshold { rule: i, threshold_s: rule.threshold_s });
        }
        if let SensorScope::Only(ids) = &rule.sensor_scope {
            if let Some(unknown) = ids.iter().find(|id| !known_sensors.contains(*id)) {
                return Err(CleaningError::UnknownSensorInScope { rule: i, sensor: unknown.clone() });
            }
        }
    }

    let mut report = CleaningReport {
        events_before: events.len(),
        ..Default::default()
    };
    let mut current = events.to_vec();
    for rule in rules {
        let (next, outcome) = apply_rule(current, rule);
        current = next;
        report.rules.push(outcome);
    }
    current.sort_by(|a, b| (a.start, a.end, &a.sensor_id, a.event_id).cmp(&(b.start, b.end, &b.sensor_id, b.event_id)));
    for (i, e) in current.iter_mut().enumerate() {
        e.event_id = i as u64;
    }
    report.events_after = current.len();
    Ok((current, report))
}

/// Cleans a dataset's events, filling in per-sensor stats before and after.
pub fn clean_dataset(
    dataset: &Dataset,
    rules: &[CleaningRule],
) -> Result<(Dataset, CleaningReport), CleaningError> {
    let known: BTreeSet<String> = dataset.sensors.iter().map(|s| s.sensor_id.clone()).collect();
    let (events, mut report) = apply_rules(&dataset.events, rules, &known)?;
    let cleaned = Dataset {
        events,
        ..dataset.clone()
    };
    report.sensor_stats_before = sensor_duration_stats(dataset);
    report.sensor_stats_after = sensor_duration_stats(&cleaned);
    Ok((cleaned, report))
}
