//! Binary sensor-state features: bit `k` says whether sensor `k` was active
//! at any point of the segment's window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{intervals_intersect, Dataset, Instant};
use crate::segmentation::Segment;

#[derive(Debug, Error, PartialEq)]
pub enum RepresentationError {
    #[error("masked sensor {0:?} is not in the catalog")]
    UnknownSensorInMask(String),
    #[error("no instances")]
    EmptyInstances,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<bool>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, k: usize) -> bool {
        self.0[k]
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub features: FeatureVector,
    pub label: String,
    pub anchor: Instant,
    pub local_day: NaiveDate,
}

/// Unmasked sensor ids in lexicographic order: the feature layout.
pub fn feature_order(
    dataset: &Dataset,
    mask: &BTreeSet<String>,
) -> Result<Vec<String>, RepresentationError> {
    let ids = dataset.sorted_sensor_ids();
    if let Some(unknown) = mask.iter().find(|m| !ids.contains(m)) {
        return Err(RepresentationError::UnknownSensorInMask(unknown.clone()));
    }
    Ok(ids.into_iter().filter(|id| !mask.contains(id)).collect())
}

/// Featurizes segments over the unmasked sensors. Returns the feature order
/// alongside the instances.
pub fn featurize(
    dataset: &Dataset,
    segments: &[Segment],
    mask: &BTreeSet<String>,
) -> Result<(Vec<String>, Vec<LabeledInstance>), RepresentationError> {
    let order = feature_order(dataset, mask)?;
    let mut per_sensor: Vec<Vec<(Instant, Instant)>> = vec![Vec::new(); order.len()];
    let index: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    for e in &dataset.events {
        if let Some(&k) = index.get(e.sensor_id.as_str()) {
            per_sensor[k].push((e.start, e.end));
        }
    }
    for spans in &mut per_sensor {
        spans.sort();
    }

    let instances = segments
        .iter()
        .map(|seg| {
            let window = (seg.window_start, seg.window_end);
            let bits = per_sensor
                .iter()
                .map(|spans| {
                    // same-sensor events are disjoint, so ends are sorted with starts
                    let from = spans.partition_point(|&(_, end)| end < window.0);
                    spans[from..]
                        .iter()
                        .take_while(|&&(start, _)| start < window.1)
                        .any(|&span| intervals_intersect(span, window))
                })
                .collect();
            LabeledInstance {
                features: FeatureVector(bits),
                label: seg.label.clone(),
                anchor: seg.anchor,
                local_day: seg.local_day,
            }
        })
        .collect();
    Ok((order, instances))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub class: String,
    pub count: usize,
    /// Fraction of this class's instances with each bit set, in sensor order.
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistribution {
    pub sensors: Vec<String>,
    pub classes: Vec<ClassRates>,
}

/// Per-class activation rate of every feature.
pub fn feature_distribution(
    instances: &[LabeledInstance],
    sensor_order: &[String],
) -> Result<FeatureDistribution, RepresentationError> {
    if instances.is_empty() {
        return Err(RepresentationError::EmptyInstances);
    }
    let mut counts: BTreeMap<&str, (usize, Vec<usize>)> = BTreeMap::new();
    for inst in instances {
        let entry = counts
            .entry(inst.label.as_str())
            .or_insert_with(|| (0, vec![0; sensor_order.len()]));
        entry.0 += 1;
        for (k, &b) in inst.features.0.iter().enumerate() {
            entry.1[k] += b as usize;
        }
    }
    Ok(FeatureDistribution {
        sensors: sensor_order.to_vec(),
        classes: counts
            .into_iter()
            .map(|(class, (n, set))| ClassRates {
                class: class.to_string(),
                count: n,
                rates: set.into_iter().map(|c| c as f64 / n as f64).collect(),
            })
            .collect(),
    })
}
