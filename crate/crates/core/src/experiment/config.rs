use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::classifier::TreeParams;
use crate::cleaning::CleaningRule;
use crate::ingest::DEFAULT_RESIDENT;

/// Full description of one pipeline run. Every field except `dataset_id`
/// has a default, so `{"dataset_id": "ordonez-a"}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset_id: String,
    #[serde(default = "default_resident")]
    pub resident_id: String,
    #[serde(default)]
    pub cleaning_rules: Vec<CleaningRule>,
    #[serde(default = "default_window_s")]
    pub window_s: f64,
    #[serde(default)]
    pub masked_sensors: BTreeSet<String>,
    #[serde(default)]
    pub tree_params: TreeParams,
    #[serde(default = "default_min_train_days")]
    pub min_train_days: usize,
    #[serde(default = "default_resolution_s")]
    pub timeline_resolution_s: f64,
    #[serde(default)]
    pub notes: String,
}

fn default_resident() -> String {
    DEFAULT_RESIDENT.to_string()
}

fn default_window_s() -> f64 {
    60.0
}

fn default_min_train_days() -> usize {
    1
}

fn default_resolution_s() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn new(dataset_id: impl Into<String>) -> Self {
        ExperimentConfig {
            dataset_id: dataset_id.into(),
            resident_id: default_resident(),
            cleaning_rules: Vec::new(),
            window_s: default_window_s(),
            masked_sensors: BTreeSet::new(),
            tree_params: TreeParams::default(),
            min_train_days: default_min_train_days(),
            timeline_resolution_s: default_resolution_s(),
            notes: String::new(),
        }
    }

    pub fn with_window(mut self, window_s: f64) -> Self {
        self.window_s = window_s;
        self
    }

    pub fn with_mask<I: IntoIterator<Item = S>, S: Into<String>>(mut self, sensors: I) -> Self {
        self.masked_sensors = sensors.into_iter().map(Into::into).collect();
        self
    }

    /// Checks the field-level constraints that do not need the dataset.
    pub fn check(&self) -> Result<(), String> {
        if self.dataset_id.is_empty() {
            return Err("dataset_id is empty".into());
        }
        if !(self.window_s > 0.0) {
            return Err(format!("window_s must be positive, got {}", self.window_s));
        }
        if !(self.timeline_resolution_s > 0.0) {
            return Err(format!(
                "timeline_resolution_s must be positive, got {}",
                self.timeline_resolution_s
            ));
        }
        if self.min_train_days < 1 {
            return Err("min_train_days must be at least 1".into());
        }
        for (i, rule) in self.cleaning_rules.iter().enumerate() {
            if !(rule.threshold_s > 0.0) {
                return Err(format!("cleaning rule {i}: threshold_s must be positive"));
            }
        }
        self.tree_params.check().map_err(|e| e.to_string())
    }
}
