use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::events::{build_timeline, event_error_analysis, EventCounts, EventErrorReport};
use super::folds::{make_folds, Fold};
use super::scores::{confusion_and_scores, ConfusionMatrix, ScoreSet};
use super::EvaluationError;
use crate::classifier::{fit, DecisionTreeModel};
use crate::experiment::ExperimentConfig;
use crate::model::{ActivityAnnotation, Dataset, IDLE};
use crate::representation::{feature_distribution, featurize, FeatureDistribution};
use crate::segmentation::segments;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub test_day: NaiveDate,
    pub train_days: BTreeSet<NaiveDate>,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub scores: ScoreSet,
    pub event_errors: EventErrorReport,
    pub model: DecisionTreeModel,
}

/// Compact per-fold line of a run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub test_day: NaiveDate,
    pub n_train: usize,
    pub n_test: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub folds: usize,
    /// Headline metric: unweighted mean over folds of micro-F1.
    pub mean_micro_f1: f64,
    pub mean_macro_f1: f64,
    /// Mean F1 per class over the folds where the class has support.
    pub mean_class_f1: BTreeMap<String, f64>,
    pub event_errors: EventCounts,
    pub underfill_s: f64,
    pub overfill_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset_name: String,
    pub resident_id: String,
    pub window_s: f64,
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub instances: usize,
    pub fold_scores: Vec<FoldScore>,
    pub aggregate: Aggregate,
    pub feature_distribution: FeatureDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub summary: RunSummary,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldProgress {
    pub completed: usize,
    pub total: usize,
}

/// Receives progress notifications, one call at a time.
pub trait ProgressSink {
    fn folds_planned(&mut self, _total: usize) -> Result<(), String> {
        Ok(())
    }

    fn fold_done(&mut self, progress: FoldProgress, result: &FoldResult) -> Result<(), String>;
}

/// Discards every notification.
pub struct NoProgress;

impl ProgressSink for NoProgress {
    fn fold_done(&mut self, _: FoldProgress, _: &FoldResult) -> Result<(), String> {
        Ok(())
    }
}

impl<F: FnMut(FoldProgress, &FoldResult)> ProgressSink for F {
    fn fold_done(&mut self, progress: FoldProgress, result: &FoldResult) -> Result<(), String> {
        self(progress, result);
        Ok(())
    }
}

/// Annotations intersecting `[start, end)`, clipped to it.
fn clip_annotations(
    annotations: &[ActivityAnnotation],
    span: (crate::model::Instant, crate::model::Instant),
) -> Vec<ActivityAnnotation> {
    annotations
        .iter()
        .filter(|a| a.start < span.1 && a.end > span.0)
        .map(|a| ActivityAnnotation {
            start: a.start.max(span.0),
            end: a.end.min(span.1),
            ..a.clone()
        })
        .collect()
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn aggregate(folds: &[FoldResult], classes: &[String]) -> Aggregate {
    let mut agg = Aggregate {
        folds: folds.len(),
        mean_micro_f1: mean(folds.iter().map(|f| f.scores.micro_f1)),
        mean_macro_f1: mean(folds.iter().map(|f| f.scores.macro_f1)),
        ..Default::default()
    };
    for (i, class) in classes.iter().enumerate() {
        let supported: Vec<f64> = folds
            .iter()
            .map(|f| &f.scores.per_class[i])
            .filter(|c| c.support > 0)
            .map(|c| c.f1)
            .collect();
        if !supported.is_empty() {
            agg.mean_class_f1.insert(class.clone(), mean(supported));
        }
    }
    for f in folds {
        agg.event_errors.add(&f.event_errors.counts);
        agg.underfill_s += f.event_errors.underfill_s;
        agg.overfill_s += f.event_errors.overfill_s;
    }
    agg
}

/// Segments, featurizes and cross-validates an (already cleaned) dataset.
pub fn evaluate_cv(
    dataset: &Dataset,
    config: &ExperimentConfig,
    sink: &mut dyn ProgressSink,
) -> Result<CvOutcome, EvaluationError> {
    let segs = segments(dataset, config.window_s, &config.resident_id)?;
    let (feature_names, instances) = featurize(dataset, &segs, &config.masked_sensors)?;
    let folds: Vec<Fold> = make_folds(&instances, config.min_train_days);
    if folds.is_empty() {
        let days: BTreeSet<NaiveDate> = instances.iter().map(|i| i.local_day).collect();
        return Err(EvaluationError::InsufficientDays {
            days: days.len(),
            min_train_days: config.min_train_days,
        });
    }
    let mut classes = dataset.activity_ids();
    classes.push(IDLE.to_string());
    let annotations = dataset.resident_annotations(&config.resident_id);

    sink.folds_planned(folds.len()).map_err(EvaluationError::Sink)?;
    let mut results = Vec::with_capacity(folds.len());
    for fold in &folds {
        let train: Vec<_> = instances.iter().filter(|i| fold.is_train(i.local_day)).cloned().collect();
        let test_idx: Vec<usize> = (0..instances.len())
            .filter(|&i| instances[i].local_day == fold.test_day)
            .collect();
        let model = fit(&train, &feature_names, &config.tree_params)?;

        let truth: Vec<String> = test_idx.iter().map(|&i| instances[i].label.clone()).collect();
        let pred: Vec<String> = test_idx
            .iter()
            .map(|&i| model.predict(&instances[i].features).map(str::to_string))
            .collect::<Result<_, _>>()?;
        let (confusion, scores) = confusion_and_scores(&truth, &pred, &classes)?;

        let test_segments: Vec<_> = test_idx.iter().map(|&i| segs[i].clone()).collect();
        let timeline = build_timeline(&test_segments, &pred, config.timeline_resolution_s)?;
        let truth_events = clip_annotations(&annotations, (timeline.start, timeline.end()));
        let event_errors = event_error_analysis(&timeline, &truth_events, &classes)?;

        let result = FoldResult {
            test_day: fold.test_day,
            train_days: fold.train_days.clone(),
            n_train: train.len(),
            n_test: test_idx.len(),
            confusion,
            scores,
            event_errors,
            model,
        };
        let progress = FoldProgress { completed: results.len() + 1, total: folds.len() };
        sink.fold_done(progress, &result).map_err(EvaluationError::Sink)?;
        results.push(result);
    }

    let summary = RunSummary {
        dataset_name: dataset.name.clone(),
        resident_id: config.resident_id.clone(),
        window_s: config.window_s,
        classes: classes.clone(),
        feature_names: feature_names.clone(),
        instances: instances.len(),
        fold_scores: results
            .iter()
            .map(|f| FoldScore {
                test_day: f.test_day,
                n_train: f.n_train,
                n_test: f.n_test,
                micro_f1: f.scores.micro_f1,
                macro_f1: f.scores.macro_f1,
            })
            .collect(),
        aggregate: aggregate(&results, &classes),
        feature_distribution: feature_distribution(&instances, &feature_names)?,
    };
    Ok(CvOutcome { summary, folds: results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_timezone, ActivityMeta, Instant, SensorEvent, SensorMeta};

    const DAY: i64 = 86_400_000;
    const BASE: i64 = 1_577_836_800_000; // 2020-01-01T00:00:00Z

    fn at(day: i64, minute: i64) -> Instant {
        Instant::from_millis(BASE + day * DAY + minute * 60_000)
    }

    /// Each day: "s" fires during a 10-minute A at 08:00, "t" during a
    /// 10-minute B at 12:00.
    fn toy(days: i64) -> Dataset {
        let mut events = Vec::new();
        let mut annotations = Vec::new();
        for d in 0..days {
            for (sensor, act, minute) in [("s", "A", 480), ("t", "B", 720)] {
                events.push(SensorEvent {
                    event_id: events.len() as u64,
                    sensor_id: sensor.into(),
                    start: at(d, minute + 2),
                    end: at(d, minute + 5),
                });
                annotations.push(ActivityAnnotation {
                    annotation_id: annotations.len() as u64,
                    resident_id: "R1".into(),
                    activity_id: act.into(),
                    start: at(d, minute),
                    end: at(d, minute + 10),
                });
            }
        }
        Dataset {
            name: "toy".into(),
            timezone: parse_timezone("UTC").unwrap(),
            sensors: ["s", "t"]
                .map(|s| SensorMeta { sensor_id: s.into(), label: s.into(), location: None, kind: None })
                .to_vec(),
            activities: ["A", "B"].map(|a| ActivityMeta { activity_id: a.into(), label: a.into() }).to_vec(),
            residents: vec!["R1".into()],
            events,
            annotations,
        }
    }

    #[test]
    fn two_identical_days_give_perfect_single_fold() {
        let config = ExperimentConfig::new("toy").with_window(60.0);
        let out = evaluate_cv(&toy(2), &config, &mut NoProgress).unwrap();
        assert_eq!(out.folds.len(), 1);
        assert_eq!(out.summary.aggregate.mean_micro_f1, 1.0);
        assert_eq!(out.summary.classes, vec!["A", "B", "Idle"]);
        let fold = &out.folds[0];
        assert_eq!(fold.n_train, 4);
        assert_eq!(fold.n_test, 4);
        assert!(fold.train_days.iter().all(|d| *d < fold.test_day));
    }

    #[test]
    fn progress_is_reported_per_fold() {
        let mut seen = Vec::new();
        let mut sink = |p: FoldProgress, _: &FoldResult| seen.push((p.completed, p.total));
        let out = evaluate_cv(&toy(4), &ExperimentConfig::new("toy"), &mut sink).unwrap();
        assert_eq!(out.folds.len(), 3);
        assert_eq!(seen, vec![(1, 3), (2, 3), (3, 3)]);
    }

    #[test]
    fn one_day_cannot_be_evaluated() {
        let err = evaluate_cv(&toy(1), &ExperimentConfig::new("toy"), &mut NoProgress).unwrap_err();
        assert!(matches!(err, EvaluationError::InsufficientDays { days: 1, min_train_days: 1 }));
    }

    #[test]
    fn sink_failure_aborts() {
        struct Failing;
        impl ProgressSink for Failing {
            fn fold_done(&mut self, _: FoldProgress, _: &FoldResult) -> Result<(), String> {
                Err("disk full".into())
            }
        }
        let err = evaluate_cv(&toy(2), &ExperimentConfig::new("toy"), &mut Failing).unwrap_err();
        assert!(matches!(err, EvaluationError::Sink(m) if m == "disk full"));
    }
}
