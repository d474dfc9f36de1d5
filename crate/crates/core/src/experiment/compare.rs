use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::store::RunRecord;
use super::ExperimentError;
use crate::evaluation::EventCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `b - a`, when both sides exist.
    pub delta: Option<f64>,
}

impl MetricDelta {
    fn new(a: Option<f64>, b: Option<f64>) -> Self {
        let delta = a.zip(b).map(|(a, b)| b - a);
        MetricDelta { a, b, delta }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCountsDelta {
    pub correct: i64,
    pub deletion: i64,
    pub insertion: i64,
    pub fragmentation: i64,
    pub merge: i64,
}

impl EventCountsDelta {
    fn between(a: &EventCounts, b: &EventCounts) -> Self {
        let d = |x: usize, y: usize| y as i64 - x as i64;
        EventCountsDelta {
            correct: d(a.correct, b.correct),
            deletion: d(a.deletion, b.deletion),
            insertion: d(a.insertion, b.insertion),
            fragmentation: d(a.fragmentation, b.fragmentation),
            merge: d(a.merge, b.merge),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigDiff {
    pub masked_added: Vec<String>,
    pub masked_removed: Vec<String>,
    /// Other top-level config fields whose values differ, as `[a, b]`.
    pub changed: BTreeMap<String, (Value, Value)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    pub run_a: String,
    pub run_b: String,
    pub dataset_id: String,
    pub mean_micro_f1: MetricDelta,
    pub mean_macro_f1: MetricDelta,
    pub class_f1: BTreeMap<String, MetricDelta>,
    pub event_errors: EventCountsDelta,
    pub underfill_s: MetricDelta,
    pub overfill_s: MetricDelta,
    pub config_diff: ConfigDiff,
}

fn config_diff(a: &RunRecord, b: &RunRecord) -> ConfigDiff {
    let mut diff = ConfigDiff {
        masked_added: b.config.masked_sensors.difference(&a.config.masked_sensors).cloned().collect(),
        masked_removed: a.config.masked_sensors.difference(&b.config.masked_sensors).cloned().collect(),
        ..Default::default()
    };
    let (Ok(Value::Object(va)), Ok(Value::Object(vb))) =
        (serde_json::to_value(&a.config), serde_json::to_value(&b.config))
    else {
        return diff;
    };
    for (key, x) in &va {
        if key == "masked_sensors" || key == "notes" {
            continue;
        }
        let y = vb.get(key).cloned().unwrap_or(Value::Null);
        if *x != y {
            diff.changed.insert(key.clone(), (x.clone(), y));
        }
    }
    diff
}

/// Differences `b - a` between two finished runs on the same dataset.
pub fn compare_runs(a: &RunRecord, b: &RunRecord) -> Result<RunComparison, ExperimentError> {
    if a.config.dataset_id != b.config.dataset_id || a.config.resident_id != b.config.resident_id {
        return Err(ExperimentError::IncomparableRuns {
            a: a.run_id.clone(),
            b: b.run_id.clone(),
            reason: "runs use different datasets or residents".into(),
        });
    }
    let (sa, sb) = match (&a.summary, &b.summary) {
        (Some(sa), Some(sb)) if a.status.is_done() && b.status.is_done() => (sa, sb),
        _ => {
            let pending = if a.status.is_done() && a.summary.is_some() { &b.run_id } else { &a.run_id };
            return Err(ExperimentError::RunNotDone(pending.clone()));
        }
    };
    let (ga, gb) = (&sa.aggregate, &sb.aggregate);
    let mut class_f1 = BTreeMap::new();
    for class in ga.mean_class_f1.keys().chain(gb.mean_class_f1.keys()) {
        class_f1.entry(class.clone()).or_insert_with(|| {
            MetricDelta::new(ga.mean_class_f1.get(class).copied(), gb.mean_class_f1.get(class).copied())
        });
    }
    Ok(RunComparison {
        run_a: a.run_id.clone(),
        run_b: b.run_id.clone(),
        dataset_id: a.config.dataset_id.clone(),
        mean_micro_f1: MetricDelta::new(Some(ga.mean_micro_f1), Some(gb.mean_micro_f1)),
        mean_macro_f1: MetricDelta::new(Some(ga.mean_macro_f1), Some(gb.mean_macro_f1)),
        class_f1,
        event_errors: EventCountsDelta::between(&ga.event_errors, &gb.event_errors),
        underfill_s: MetricDelta::new(Some(ga.underfill_s), Some(gb.underfill_s)),
        overfill_s: MetricDelta::new(Some(ga.overfill_s), Some(gb.overfill_s)),
        config_diff: config_diff(a, b),
    })
}
