use std::path::Path;

use super::config::ExperimentConfig;
use super::store::{FailureReason, RunRecord, RunStatus, RunWriter};
use super::{DatasetSource, ExperimentError};
use crate::classifier::render_tree;
use crate::cleaning::clean_dataset;
use crate::evaluation::{evaluate_cv, FoldProgress, FoldResult, ProgressSink, RunSummary};

/// Persists each fold as soon as it completes.
struct RunProgress<'a> {
    writer: &'a mut RunWriter,
    total: usize,
}

impl ProgressSink for RunProgress<'_> {
    fn folds_planned(&mut self, total: usize) -> Result<(), String> {
        self.total = total;
        self.writer
            .set_status(RunStatus::Running { completed_folds: 0, total_folds: total })
            .map_err(|e| e.to_string())
    }

    fn fold_done(&mut self, progress: FoldProgress, result: &FoldResult) -> Result<(), String> {
        self.writer
            .write_fold(result, &render_tree(&result.model))
            .map_err(|e| e.to_string())?;
        self.writer
            .set_status(RunStatus::Running {
                completed_folds: progress.completed,
                total_folds: progress.total,
            })
            .map_err(|e| e.to_string())
    }
}

fn pipeline(
    writer: &mut RunWriter,
    config: &ExperimentConfig,
    source: &dyn DatasetSource,
) -> Result<RunSummary, ExperimentError> {
    config.check().map_err(ExperimentError::InvalidConfig)?;
    let dataset = source.dataset(&config.dataset_id)?;
    let (cleaned, report) = clean_dataset(&dataset, &config.cleaning_rules)?;
    writer.write_cleaning_report(&report)?;
    let mut progress = RunProgress { writer, total: 0 };
    let outcome = evaluate_cv(&cleaned, config, &mut progress)?;
    progress.writer.write_summary(&outcome.summary)?;
    Ok(outcome.summary)
}

/// Runs the pipeline inside an already created run directory. Pipeline
/// failures end up in the record's status; only failing to write the
/// terminal status is reported as an error.
pub fn execute_run(
    mut writer: RunWriter,
    config: &ExperimentConfig,
    source: &dyn DatasetSource,
) -> Result<RunRecord, ExperimentError> {
    let result = pipeline(&mut writer, config, source);
    let (status, summary) = match result {
        Ok(summary) => (RunStatus::Done, Some(summary)),
        Err(e) => (
            RunStatus::Failed {
                reason: FailureReason { code: e.code().to_string(), message: e.to_string() },
            },
            None,
        ),
    };
    writer.set_status(status.clone())?;
    Ok(RunRecord {
        run_id: writer.run_id().to_string(),
        created_at: writer.created_at().to_string(),
        status,
        config: config.clone(),
        summary,
    })
}

/// Creates a run under `out_root` and executes it to completion.
pub fn run_experiment(
    config: &ExperimentConfig,
    source: &dyn DatasetSource,
    out_root: &Path,
) -> Result<RunRecord, ExperimentError> {
    let writer = RunWriter::create(out_root, config)?;
    execute_run(writer, config, source)
}
