use std::fs;
use std::path::{Path, PathBuf};

use flowar_core::cleaning::{CleaningRule, RuleKind, SensorScope};
use flowar_core::experiment::{
    compare_runs, list_runs, load_run, run_experiment, DatasetStore, ExperimentConfig, RunStatus,
    SUMMARY_FILE,
};
use flowar_core::ingest::ingest_ordonez;
use flowar_core::model::{parse_timezone, save_uniform, Dataset};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_home").join(name)
}

fn synthetic_home() -> Dataset {
    let tz = parse_timezone("Europe/Madrid").unwrap();
    ingest_ordonez(fixture("Sensors.txt"), fixture("ADLs.txt"), "synthetic-home", tz)
        .unwrap()
        .0
}

fn store_with_home() -> (tempfile::TempDir, DatasetStore) {
    let dir = tempfile::tempdir().unwrap();
    save_uniform(&synthetic_home(), dir.path().join("home")).unwrap();
    let store = DatasetStore::new(dir.path());
    (dir, store)
}

#[test]
fn ingest_report_accounts_for_fixture_quirks() {
    let tz = parse_timezone("Europe/Madrid").unwrap();
    let (ds, report) =
        ingest_ordonez(fixture("Sensors.txt"), fixture("ADLs.txt"), "synthetic-home", tz).unwrap();
    assert_eq!(report.sensors.rows_skipped, 1, "negative-duration row is skipped");
    assert_eq!(report.sensors.rows_merged, 1, "touching same-sensor rows merge");
    assert!(report.overlaps.annotations_altered >= 1, "snack cuts into TV time");
    assert_eq!(report.annotated_days, 5);
    assert_eq!(ds.residents, vec!["R1".to_string()]);
}

#[test]
fn full_run_writes_complete_record() {
    let (_data, store) = store_with_home();
    let runs = tempfile::tempdir().unwrap();
    let record = run_experiment(&ExperimentConfig::new("home"), &store, runs.path()).unwrap();
    assert_eq!(record.status, RunStatus::Done, "{:?}", record.status);

    let loaded = load_run(runs.path(), &record.run_id).unwrap();
    assert_eq!(loaded.record, record);
    let summary = record.summary.as_ref().unwrap();
    assert_eq!(loaded.folds.len(), 4);
    assert_eq!(summary.aggregate.folds, 4);
    assert!(loaded.cleaning_report.is_some());
    for fold in &loaded.folds {
        assert!(fold.train_days.iter().all(|d| *d < fold.test_day));
        let tree = runs.path().join(&record.run_id).join(format!("tree_{}.txt", fold.test_day));
        assert!(fs::read_to_string(tree).unwrap().contains("=>"));
    }
    assert!(summary.aggregate.mean_micro_f1 > 0.5, "{}", summary.aggregate.mean_micro_f1);
    assert_eq!(list_runs(runs.path()).unwrap().len(), 1);
}

#[test]
fn identical_configs_give_identical_summaries() {
    let (_data, store) = store_with_home();
    let runs = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new("home").with_window(120.0);
    let a = run_experiment(&cfg, &store, runs.path()).unwrap();
    let b = run_experiment(&cfg, &store, runs.path()).unwrap();
    assert_ne!(a.run_id, b.run_id);
    let read = |id: &str| fs::read(runs.path().join(id).join(SUMMARY_FILE)).unwrap();
    assert_eq!(read(&a.run_id), read(&b.run_id));
}

#[test]
fn masking_and_comparison() {
    let (_data, store) = store_with_home();
    let runs = tempfile::tempdir().unwrap();
    let base = run_experiment(&ExperimentConfig::new("home"), &store, runs.path()).unwrap();
    let masked_cfg = ExperimentConfig::new("home").with_mask(["Door|PIR|Kitchen", "Door|PIR|Bathroom"]);
    let masked = run_experiment(&masked_cfg, &store, runs.path()).unwrap();
    let summary = masked.summary.as_ref().unwrap();
    assert!(!summary.feature_names.iter().any(|f| f.starts_with("Door|")));

    let cmp = compare_runs(&base, &masked).unwrap();
    assert_eq!(cmp.config_diff.masked_added.len(), 2);
    assert!(cmp.config_diff.masked_removed.is_empty());
    assert!(cmp.config_diff.changed.is_empty());
    let expected = summary.aggregate.mean_micro_f1 - base.summary.as_ref().unwrap().aggregate.mean_micro_f1;
    assert_eq!(cmp.mean_micro_f1.delta, Some(expected));
}

#[test]
fn failures_are_recorded_not_raised() {
    let (_data, store) = store_with_home();
    let runs = tempfile::tempdir().unwrap();

    let missing = run_experiment(&ExperimentConfig::new("nope"), &store, runs.path()).unwrap();
    match &missing.status {
        RunStatus::Failed { reason } => assert_eq!(reason.code, "DatasetNotFound"),
        other => panic!("{other:?}"),
    }

    let bad_mask = ExperimentConfig::new("home").with_mask(["Nope|X|Y"]);
    let r = run_experiment(&bad_mask, &store, runs.path()).unwrap();
    assert!(matches!(&r.status, RunStatus::Failed { reason } if reason.code == "InvalidMask"));

    let mut cfg = ExperimentConfig::new("home");
    cfg.cleaning_rules = vec![CleaningRule::new(RuleKind::DropShort, SensorScope::only(["Nope"]), 1.0)];
    let r = run_experiment(&cfg, &store, runs.path()).unwrap();
    assert!(matches!(&r.status, RunStatus::Failed { reason } if reason.code == "UnknownSensorInScope"));

    let mut cfg = ExperimentConfig::new("home");
    cfg.min_train_days = 10;
    let r = run_experiment(&cfg, &store, runs.path()).unwrap();
    assert!(matches!(&r.status, RunStatus::Failed { reason } if reason.code == "InsufficientDays"));

    assert!(matches!(
        compare_runs(&missing, &r),
        Err(flowar_core::experiment::ExperimentError::IncomparableRuns { .. })
    ));
    assert!(matches!(
        compare_runs(&r, &r),
        Err(flowar_core::experiment::ExperimentError::RunNotDone(_))
    ));
}

#[test]
fn cleaning_is_applied_before_segmentation() {
    let (_data, store) = store_with_home();
    let runs = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new("home");
    cfg.cleaning_rules = vec![CleaningRule::new(RuleKind::DropShort, SensorScope::all(), 10.0)];
    let r = run_experiment(&cfg, &store, runs.path()).unwrap();
    assert_eq!(r.status, RunStatus::Done);
    let loaded = load_run(runs.path(), &r.run_id).unwrap();
    let report = loaded.cleaning_report.unwrap();
    assert!(report.total_removed() > 0);
    assert_eq!(report.events_before - report.total_removed(), report.events_after);
}

#[test]
fn comparisons_need_the_same_dataset() {
    let (data, store) = store_with_home();
    save_uniform(&synthetic_home(), data.path().join("home-copy")).unwrap();
    let runs = tempfile::tempdir().unwrap();
    let a = run_experiment(&ExperimentConfig::new("home"), &store, runs.path()).unwrap();
    let b = run_experiment(&ExperimentConfig::new("home-copy"), &store, runs.path()).unwrap();
    assert!(matches!(
        compare_runs(&a, &b),
        Err(flowar_core::experiment::ExperimentError::IncomparableRuns { .. })
    ));

    let same = compare_runs(&a, &a).unwrap();
    assert_eq!(same.mean_micro_f1.delta, Some(0.0));
    assert_eq!(same.mean_macro_f1.delta, Some(0.0));
    assert!(same.class_f1.values().all(|d| d.delta == Some(0.0)));
    assert_eq!(same.event_errors, Default::default());
}
