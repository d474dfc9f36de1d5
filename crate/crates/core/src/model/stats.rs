use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{overlap_millis, Dataset, Instant};

/// Summary of a set of interval durations, in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub count: usize,
    pub min_s: f64,
    pub mean_s: f64,
    pub median_s: f64,
    pub max_s: f64,
}

impl DurationStats {
    pub fn from_millis(durations: impl IntoIterator<Item = i64>) -> Self {
        let mut d: Vec<i64> = durations.into_iter().collect();
        if d.is_empty() {
            return DurationStats::default();
        }
        d.sort_unstable();
        let n = d.len();
        let median_ms = if n % 2 == 1 {
            d[n / 2] as f64
        } else {
            (d[n / 2 - 1] + d[n / 2]) as f64 / 2.0
        };
        let total: i64 = d.iter().sum();
        DurationStats {
            count: n,
            min_s: d[0] as f64 / 1000.0,
            mean_s: total as f64 / n as f64 / 1000.0,
            median_s: median_ms / 1000.0,
            max_s: d[n - 1] as f64 / 1000.0,
        }
    }
}

/// `values[a][s]`: fraction of activity `a`'s annotated time during which
/// sensor `s` is active. Rows follow catalog order, columns sorted sensor ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub activities: Vec<String>,
    pub sensors: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl OverlapMatrix {
    pub fn get(&self, activity_id: &str, sensor_id: &str) -> Option<f64> {
        let a = self.activities.iter().position(|x| x == activity_id)?;
        let s = self.sensors.iter().position(|x| x == sensor_id)?;
        Some(self.values[a][s])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    /// Local calendar days covered by the data; the denominator of `sensor_frequency`.
    pub days: usize,
    pub sensor_duration_stats: BTreeMap<String, DurationStats>,
    pub activity_duration_stats: BTreeMap<String, DurationStats>,
    /// Activations per local day.
    pub sensor_frequency: BTreeMap<String, f64>,
    pub overlap_matrix: OverlapMatrix,
}

pub fn sensor_duration_stats(dataset: &Dataset) -> BTreeMap<String, DurationStats> {
    dataset
        .sensors
        .iter()
        .map(|s| {
            let durations = dataset
                .events
                .iter()
                .filter(|e| e.sensor_id == s.sensor_id)
                .map(|e| e.duration_millis());
            (s.sensor_id.clone(), DurationStats::from_millis(durations))
        })
        .collect()
}

/// Exploration statistics: durations, activation frequencies and the
/// activity × sensor overlap matrix.
pub fn explore_stats(dataset: &Dataset) -> StatsReport {
    let days = dataset.local_days().len();
    let sensor_ids = dataset.sorted_sensor_ids();

    let mut active: BTreeMap<&str, Vec<(Instant, Instant)>> = BTreeMap::new();
    for e in &dataset.events {
        active.entry(e.sensor_id.as_str()).or_default().push((e.start, e.end));
    }

    let sensor_frequency = sensor_ids
        .iter()
        .map(|id| {
            let n = active.get(id.as_str()).map_or(0, Vec::len);
            let rate = if days == 0 { 0.0 } else { n as f64 / days as f64 };
            (id.clone(), rate)
        })
        .collect();

    let activity_duration_stats = dataset
        .activities
        .iter()
        .map(|a| {
            let durations = dataset
                .annotations
                .iter()
                .filter(|x| x.activity_id == a.activity_id)
                .map(|x| x.duration_millis());
            (a.activity_id.clone(), DurationStats::from_millis(durations))
        })
        .collect();

    let overlap_matrix = if dataset.annotations.is_empty() {
        OverlapMatrix::default()
    } else {
        let values = dataset
            .activities
            .iter()
            .map(|a| {
                let spans: Vec<(Instant, Instant)> = dataset
                    .annotations
                    .iter()
                    .filter(|x| x.activity_id == a.activity_id)
                    .map(|x| (x.start, x.end))
                    .collect();
                let total: i64 = spans.iter().map(|(s, e)| e.millis() - s.millis()).sum();
                sensor_ids
                    .iter()
                    .map(|sid| {
                        if total == 0 {
                            return 0.0;
                        }
                        let covered: i64 = spans
                            .iter()
                            .map(|&span| {
                                active
                                    .get(sid.as_str())
                                    .map_or(0, |ev| ev.iter().map(|&e| overlap_millis(span, e)).sum())
                            })
                            .sum();
                        (covered as f64 / total as f64).clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        OverlapMatrix {
            activities: dataset.activity_ids(),
            sensors: sensor_ids.clone(),
            values,
        }
    };

    StatsReport {
        days,
        sensor_duration_stats: sensor_duration_stats(dataset),
        activity_duration_stats,
        sensor_frequency,
        overlap_matrix,
    }
}
