use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{NaiveDate, SecondsFormat, Utc};
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::ExperimentError;
use crate::cleaning::CleaningReport;
use crate::evaluation::{FoldResult, RunSummary};
use crate::model::{load_uniform, Dataset, DatasetError, META_FILE};

pub const CONFIG_FILE: &str = "config.json";
pub const STATUS_FILE: &str = "status.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CLEANING_FILE: &str = "cleaning_report.json";
pub const FOLDS_DIR: &str = "folds";

/// Where runs find their datasets.
pub trait DatasetSource: Send + Sync {
    fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ExperimentError>;
}

/// Directory of uniform datasets, one sub-directory per dataset id.
#[derive(Debug, Clone)]
pub struct DatasetStore {
    root: PathBuf,
}

pub(crate) fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl DatasetStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DatasetStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Ids of every sub-directory holding a `dataset.meta`, sorted.
    pub fn ids(&self) -> std::io::Result<Vec<String>> {
        let mut ids = Vec::new();
        if !self.root.exists() {
            return Ok(ids);
        }
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if entry.path().join(META_FILE).is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    if is_safe_id(name) {
                        ids.push(name.to_string());
                    }
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load(&self, id: &str) -> Result<Dataset, ExperimentError> {
        if !is_safe_id(id) {
            return Err(ExperimentError::DatasetNotFound(id.to_string()));
        }
        match load_uniform(self.root.join(id)) {
            Err(DatasetError::MissingFile(_)) => Err(ExperimentError::DatasetNotFound(id.to_string())),
            other => Ok(other?),
        }
    }
}

impl DatasetSource for DatasetStore {
    fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ExperimentError> {
        self.load(id).map(Arc::new)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReason {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Running { completed_folds: usize, total_folds: usize },
    Done,
    Failed { reason: FailureReason },
}

impl RunStatus {
    pub fn is_done(&self) -> bool {
        matches!(self, RunStatus::Done)
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, RunStatus::Done | RunStatus::Failed { .. })
    }
}

/// Contents of `status.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusDocument {
    pub run_id: String,
    pub created_at: String,
    pub updated_at: String,
    #[serde(flatten)]
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub created_at: String,
    #[serde(flatten)]
    pub status: RunStatus,
    pub config: ExperimentConfig,
    pub summary: Option<RunSummary>,
}

/// A run as found on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRun {
    pub record: RunRecord,
    pub folds: Vec<FoldResult>,
    pub cleaning_report: Option<CleaningReport>,
}

pub fn new_run_id() -> String {
    let mut bytes = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut bytes);
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().expect("file path has a parent");
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_vec_pretty(value).expect("serializable");
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn tree_file_name(day: NaiveDate) -> String {
    format!("tree_{day}.txt")
}

pub fn fold_file_name(day: NaiveDate) -> String {
    format!("{day}.json")
}

/// Sole writer of one run directory.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    run_id: String,
    created_at: String,
    status: RunStatus,
}

impl RunWriter {
    /// Creates `out_root/<run_id>/` with the config and a pending status.
    pub fn create(out_root: &Path, config: &ExperimentConfig) -> Result<Self, ExperimentError> {
        let run_id = new_run_id();
        let dir = out_root.join(&run_id);
        fs::create_dir_all(dir.join(FOLDS_DIR))?;
        let writer = RunWriter {
            dir,
            run_id,
            created_at: now(),
            status: RunStatus::Pending,
        };
        write_json(&writer.dir.join(CONFIG_FILE), config)?;
        writer.write_status()?;
        Ok(writer)
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn created_at(&self) -> &str {
        &self.created_at
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn status(&self) -> &RunStatus {
        &self.status
    }

    fn write_status(&self) -> std::io::Result<()> {
        let doc = StatusDocument {
            run_id: self.run_id.clone(),
            created_at: self.created_at.clone(),
            updated_at: now(),
            status: self.status.clone(),
        };
        write_json(&self.dir.join(STATUS_FILE), &doc)
    }

    /// Moves the run forward. Terminal states are final and fold progress
    /// never goes backwards.
    pub fn set_status(&mut self, status: RunStatus) -> std::io::Result<()> {
        let allowed = match (&self.status, &status) {
            (RunStatus::Done | RunStatus::Failed { .. }, _) => false,
            (RunStatus::Running { completed_folds: a, .. }, RunStatus::Running { completed_folds: b, .. }) => b >= a,
            (RunStatus::Running { .. }, RunStatus::Pending) => false,
            _ => true,
        };
        if !allowed {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("illegal status transition {:?} -> {:?}", self.status, status),
            ));
        }
        self.status = status;
        self.write_status()
    }

    pub fn write_cleaning_report(&self, report: &CleaningReport) -> std::io::Result<()> {
        write_json(&self.dir.join(CLEANING_FILE), report)
    }

    pub fn write_fold(&self, fold: &FoldResult, tree_text: &str) -> std::io::Result<()> {
        write_json(&self.dir.join(FOLDS_DIR).join(fold_file_name(fold.test_day)), fold)?;
        write_atomic(&self.dir.join(tree_file_name(fold.test_day)), tree_text.as_bytes())
    }

    pub fn write_summary(&self, summary: &RunSummary) -> std::io::Result<()> {
        write_json(&self.dir.join(SUMMARY_FILE), summary)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ExperimentError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| ExperimentError::CorruptRunFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_optional_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>, ExperimentError> {
    if path.is_file() {
        read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

fn run_dir(out_root: &Path, run_id: &str) -> Result<PathBuf, ExperimentError> {
    let dir = out_root.join(run_id);
    if !is_safe_id(run_id) || !dir.join(STATUS_FILE).is_file() {
        return Err(ExperimentError::RunNotFound(run_id.to_string()));
    }
    Ok(dir)
}

/// Latest status document of a run.
pub fn read_status(out_root: &Path, run_id: &str) -> Result<StatusDocument, ExperimentError> {
    read_json(&run_dir(out_root, run_id)?.join(STATUS_FILE))
}

/// Reconstructs a run, complete or not, from its directory.
pub fn load_run(out_root: &Path, run_id: &str) -> Result<LoadedRun, ExperimentError> {
    let dir = run_dir(out_root, run_id)?;
    let status: StatusDocument = read_json(&dir.join(STATUS_FILE))?;
    let config: ExperimentConfig = read_json(&dir.join(CONFIG_FILE))?;
    let summary: Option<RunSummary> = read_optional_json(&dir.join(SUMMARY_FILE))?;
    let cleaning_report = read_optional_json(&dir.join(CLEANING_FILE))?;

    let mut fold_paths: Vec<PathBuf> = match fs::read_dir(dir.join(FOLDS_DIR)) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    fold_paths.sort();
    let folds = fold_paths.iter().map(|p| read_json(p)).collect::<Result<Vec<FoldResult>, _>>()?;

    Ok(LoadedRun {
        record: RunRecord {
            run_id: status.run_id,
            created_at: status.created_at,
            status: status.status,
            config,
            summary,
        },
        folds,
        cleaning_report,
    })
}

pub fn load_fold(out_root: &Path, run_id: &str, day: NaiveDate) -> Result<Option<FoldResult>, ExperimentError> {
    read_optional_json(&run_dir(out_root, run_id)?.join(FOLDS_DIR).join(fold_file_name(day)))
}

pub fn load_tree_text(out_root: &Path, run_id: &str, day: NaiveDate) -> Result<Option<String>, ExperimentError> {
    let path = run_dir(out_root, run_id)?.join(tree_file_name(day));
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Everything a finished run produced, in one document: record, per-fold
/// results, rendered trees and the cleaning report. The embedded record is
/// what [`compare_runs`](super::compare_runs) consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub record: RunRecord,
    pub folds: Vec<FoldResult>,
    pub trees: BTreeMap<NaiveDate, String>,
    pub cleaning_report: Option<CleaningReport>,
}

pub fn run_report(out_root: &Path, run_id: &str) -> Result<RunReport, ExperimentError> {
    let loaded = load_run(out_root, run_id)?;
    let mut trees = BTreeMap::new();
    for fold in &loaded.folds {
        if let Some(text) = load_tree_text(out_root, run_id, fold.test_day)? {
            trees.insert(fold.test_day, text);
        }
    }
    Ok(RunReport {
        record: loaded.record,
        folds: loaded.folds,
        trees,
        cleaning_report: loaded.cleaning_report,
    })
}

/// One line of the run history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunListing {
    pub run_id: String,
    pub created_at: String,
    #[serde(flatten)]
    pub status: RunStatus,
    pub dataset_id: String,
    pub window_s: f64,
    pub masked_sensors: Vec<String>,
    pub mean_micro_f1: Option<f64>,
    pub mean_macro_f1: Option<f64>,
}

/// Every readable run under `out_root`, oldest first.
pub fn list_runs(out_root: &Path) -> Result<Vec<RunListing>, ExperimentError> {
    let mut out = Vec::new();
    if !out_root.exists() {
        return Ok(out);
    }
    for entry in fs::read_dir(out_root)? {
        let entry = entry?;
        let Some(id) = entry.file_name().to_str().map(str::to_string) else { continue };
        if !entry.path().join(STATUS_FILE).is_file() {
            continue;
        }
        let status: StatusDocument = read_json(&entry.path().join(STATUS_FILE))?;
        let config: ExperimentConfig = read_json(&entry.path().join(CONFIG_FILE))?;
        let summary: Option<RunSummary> = read_optional_json(&entry.path().join(SUMMARY_FILE))?;
        out.push(RunListing {
            run_id: id,
            created_at: status.created_at,
            status: status.status,
            dataset_id: config.dataset_id,
            window_s: config.window_s,
            masked_sensors: config.masked_sensors.into_iter().collect(),
            mean_micro_f1: summary.as_ref().map(|s| s.aggregate.mean_micro_f1),
            mean_macro_f1: summary.as_ref().map(|s| s.aggregate.mean_macro_f1),
        });
    }
    out.sort_by(|a, b| (&a.created_at, &a.run_id).cmp(&(&b.created_at, &b.run_id)));
    Ok(out)
}
