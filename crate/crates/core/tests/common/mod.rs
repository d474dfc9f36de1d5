//! Generators and independent oracles shared by the property suites and the
//! acceptance target. Each `check_*` function runs a full randomized suite
//! and reports the first counterexample.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use flowar_core::classifier::{fit, TreeParams};
use flowar_core::evaluation::{confusion_and_scores, event_error_analysis, EventCounts, Timeline};
use flowar_core::ingest::resolve_overlaps;
use flowar_core::model::{
    load_uniform, parse_timezone, render_uniform, ActivityAnnotation, ActivityMeta, Dataset,
    Instant, SensorEvent, SensorMeta, IDLE,
};
use flowar_core::representation::{FeatureVector, LabeledInstance};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const BASE_MS: i64 = 1_577_836_800_000; // 2020-01-01T00:00:00Z

pub fn instance(bits: &[bool], label: &str) -> LabeledInstance {
    LabeledInstance {
        features: FeatureVector(bits.to_vec()),
        label: label.to_string(),
        anchor: Instant::from_millis(0),
        local_day: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn report<T: std::fmt::Debug>(result: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    result.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- CART

fn bits_of(code: usize, n_features: usize) -> Vec<bool> {
    (0..n_features).map(|k| code >> k & 1 == 1).collect()
}

/// Training-set predictions of a fully grown tree against a lookup table.
fn lookup_matches(instances: &[LabeledInstance], params: &TreeParams) -> Result<(), String> {
    let table: BTreeMap<&[bool], &str> =
        instances.iter().map(|i| (i.features.0.as_slice(), i.label.as_str())).collect();
    let model = fit(instances, &[], params).map_err(|e| e.to_string())?;
    for (bits, label) in table {
        let got = model.predict(&FeatureVector(bits.to_vec())).map_err(|e| e.to_string())?;
        if got != label {
            return Err(format!("vector {bits:?}: tree says {got}, table says {label} (data {instances:?})"));
        }
    }
    Ok(())
}

/// Exhaustive: every set of distinct vectors over 1..=3 features, every
/// labelling with up to three classes. Returns the number of datasets checked.
pub fn check_cart_exhaustive() -> Result<usize, String> {
    let params = TreeParams::default();
    let labels = ["A", "B", "C"];
    let mut checked = 0;
    for n_features in 1..=3usize {
        let n_vectors = 1usize << n_features;
        for subset in 1usize..(1 << n_vectors) {
            let codes: Vec<usize> = (0..n_vectors).filter(|c| subset >> c & 1 == 1).collect();
            let combos = 3usize.pow(codes.len() as u32);
            for mut assignment in 0..combos {
                let data: Vec<LabeledInstance> = codes
                    .iter()
                    .map(|&c| {
                        let l = labels[assignment % 3];
                        assignment /= 3;
                        instance(&bits_of(c, n_features), l)
                    })
                    .collect();
                lookup_matches(&data, &params)?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Randomized: up to 8 instances with repeats, consistent labels, shuffled order.
pub fn check_cart_with_duplicates(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=3).prop_flat_map(|n_features| {
        let n_vectors = 1usize << n_features;
        (
            Just(n_features),
            proptest::collection::vec(0..3usize, n_vectors),
            proptest::collection::vec(0..n_vectors, 1..=8),
        )
    });
    report(runner(cases).run(&strategy, |(n_features, labelling, picks)| {
        let labels = ["A", "B", "C"];
        let data: Vec<LabeledInstance> =
            picks.iter().map(|&c| instance(&bits_of(c, n_features), labels[labelling[c]])).collect();
        lookup_matches(&data, &TreeParams::default()).map_err(TestCaseError::fail)
    }))
}

// ---------------------------------------------------------------- scores

/// micro-F1 against plain accuracy, macro-F1 against per-class pair counting.
pub fn check_micro_f1_is_accuracy(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=5).prop_flat_map(|k| {
        proptest::collection::vec((0..k, 0..k), 1..60).prop_map(move |pairs| (k, pairs))
    });
    report(runner(cases).run(&strategy, |(k, pairs)| {
        let classes: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let truth: Vec<String> = pairs.iter().map(|&(t, _)| classes[t].clone()).collect();
        let pred: Vec<String> = pairs.iter().map(|&(_, p)| classes[p].clone()).collect();
        let (matrix, scores) = confusion_and_scores(&truth, &pred, &classes).map_err(|e| TestCaseError::fail(e.to_string()))?;

        let hits = pairs.iter().filter(|(t, p)| t == p).count();
        let accuracy = hits as f64 / pairs.len() as f64;
        prop_assert_eq!(matrix.trace(), hits);
        prop_assert_eq!(matrix.total(), pairs.len());
        prop_assert!((scores.micro_f1 - accuracy).abs() < 1e-12, "micro {} vs accuracy {}", scores.micro_f1, accuracy);

        let mut f1s = Vec::new();
        for c in 0..k {
            let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count() as f64;
            let fp = pairs.iter().filter(|&&(t, p)| t != c && p == c).count() as f64;
            let fn_ = pairs.iter().filter(|&&(t, p)| t == c && p != c).count() as f64;
            let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
            prop_assert!((scores.per_class[c].f1 - f1).abs() < 1e-12);
            if tp + fn_ > 0.0 {
                f1s.push(f1);
            }
        }
        let macro_f1 = f1s.iter().sum::<f64>() / f1s.len() as f64;
        prop_assert!((scores.macro_f1 - macro_f1).abs() < 1e-12);
        Ok(())
    }))
}

// ---------------------------------------------------------------- events

/// Frame-enumeration reference for event error counts. `truth` holds
/// `(class, first_frame, end_frame)` with whole-frame boundaries.
pub fn event_oracle(labels: &[String], truth: &[(String, usize, usize)], classes: &[&str]) -> EventCounts {
    // predicted events: maximal runs of one non-Idle label
    let mut runs: Vec<(String, usize, usize)> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some((rl, _, end)) if rl == l && *end == i => *end = i + 1,
            _ => runs.push((l.clone(), i, i + 1)),
        }
    }
    runs.retain(|(l, _, _)| l != IDLE);
    let shares = |a: (usize, usize), b: (usize, usize)| (a.0..a.1).any(|f| f >= b.0 && f < b.1);

    let mut counts = EventCounts::default();
    for class in classes {
        let ts: Vec<(usize, usize)> = truth.iter().filter(|t| t.0 == *class).map(|t| (t.1, t.2)).collect();
        let ps: Vec<(usize, usize)> = runs.iter().filter(|r| r.0 == *class).map(|r| (r.1, r.2)).collect();
        for (ti, &t) in ts.iter().enumerate() {
            let hits: Vec<usize> = (0..ps.len()).filter(|&j| shares(t, ps[j])).collect();
            match hits.as_slice() {
                [] => counts.deletion += 1,
                [j] if ts.iter().enumerate().any(|(oi, &o)| oi != ti && shares(o, ps[*j])) => counts.merge += 1,
                [_] => counts.correct += 1,
                _ => counts.fragmentation += 1,
            }
        }
        counts.insertion += ps.iter().filter(|&&p| !ts.iter().any(|&t| shares(t, p))).count();
    }
    counts
}

fn timeline_strategy() -> impl Strategy<Value = (Vec<String>, Vec<(String, usize, usize)>)> {
    (1usize..=40).prop_flat_map(|n| {
        let labels = proptest::collection::vec(prop_oneof![Just("A"), Just("B"), Just(IDLE)], n);
        let cuts = proptest::collection::btree_set(0..=n, 0..=10);
        let picks = proptest::collection::vec(0..3usize, 11);
        (labels, cuts, picks).prop_map(|(labels, cuts, picks)| {
            let cuts: Vec<usize> = cuts.into_iter().collect();
            let truth = cuts
                .windows(2)
                .zip(&picks)
                .filter(|(_, &p)| p < 2)
                .map(|(w, &p)| (["A", "B"][p].to_string(), w[0], w[1]))
                .collect();
            (labels.into_iter().map(str::to_string).collect(), truth)
        })
    })
}

pub fn check_event_conservation(cases: u32) -> Result<(), String> {
    report(runner(cases).run(&timeline_strategy(), |(labels, truth)| {
        let timeline = Timeline { start: Instant::from_millis(0), resolution_ms: 1000, labels: labels.clone() };
        let annotations: Vec<ActivityAnnotation> = truth
            .iter()
            .enumerate()
            .map(|(i, (c, a, b))| ActivityAnnotation {
                annotation_id: i as u64,
                resident_id: "R1".into(),
                activity_id: c.clone(),
                start: Instant::from_millis(*a as i64 * 1000),
                end: Instant::from_millis(*b as i64 * 1000),
            })
            .collect();
        let classes = vec!["A".to_string(), "B".to_string(), IDLE.to_string()];
        let got = event_error_analysis(&timeline, &annotations, &classes)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(got.counts.truth_events(), truth.len(), "conservation");
        prop_assert_eq!(got.counts, event_oracle(&labels, &truth, &["A", "B"]));
        prop_assert!(got.underfill_s >= 0.0 && got.overfill_s >= 0.0);
        Ok(())
    }))
}

// ---------------------------------------------------------------- overlaps

pub fn annotation(id: u64, resident: &str, activity: &str, start_s: i64, end_s: i64) -> ActivityAnnotation {
    ActivityAnnotation {
        annotation_id: id,
        resident_id: resident.into(),
        activity_id: activity.into(),
        start: Instant::from_millis(BASE_MS + start_s * 1000),
        end: Instant::from_millis(BASE_MS + end_s * 1000),
    }
}

fn annotations_strategy() -> impl Strategy<Value = Vec<ActivityAnnotation>> {
    proptest::collection::vec((0..2usize, 0..3usize, 0i64..200, 1i64..80), 0..12).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (r, a, s, d))| annotation(i as u64, ["R1", "R2"][r], ["a", "b", "c"][a], s, s + d))
            .collect()
    })
}

fn sorted(mut v: Vec<ActivityAnnotation>) -> Vec<ActivityAnnotation> {
    v.sort_by(|a, b| (&a.resident_id, a.start, a.end, a.annotation_id).cmp(&(&b.resident_id, b.start, b.end, b.annotation_id)));
    v
}

pub fn check_overlap_resolution(cases: u32) -> Result<(), String> {
    report(runner(cases).run(&annotations_strategy(), |input| {
        let once = resolve_overlaps(&input);
        let twice = resolve_overlaps(&once);
        prop_assert_eq!(sorted(twice), sorted(once.clone()), "idempotence");

        let mut by_resident: BTreeMap<&str, Vec<&ActivityAnnotation>> = BTreeMap::new();
        for a in &once {
            prop_assert!(a.start < a.end);
            by_resident.entry(&a.resident_id).or_default().push(a);
            // every piece comes from an input annotation of the same activity
            prop_assert!(input.iter().any(|i| i.resident_id == a.resident_id
                && i.activity_id == a.activity_id
                && i.start <= a.start
                && a.end <= i.end));
        }
        for list in by_resident.values_mut() {
            list.sort_by_key(|a| a.start);
            for w in list.windows(2) {
                prop_assert!(w[0].end <= w[1].start, "overlap between {:?} and {:?}", w[0], w[1]);
            }
        }
        let ids: BTreeSet<u64> = once.iter().map(|a| a.annotation_id).collect();
        prop_assert_eq!(ids.len(), once.len(), "ids unique");
        Ok(())
    }))
}

// ---------------------------------------------------------------- datasets

/// Random valid datasets: up to 4 sensors, 3 activities, one resident.
pub fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    let events = proptest::collection::vec((0..4usize, 1i64..5_000_000, 0i64..600_000), 0..30);
    let annotations = proptest::collection::vec((0..3usize, 1i64..20_000_000, 1_000i64..3_000_000), 0..10);
    (events, annotations, prop::bool::ANY).prop_map(|(events, annotations, madrid)| {
        let mut cursor = [BASE_MS; 4];
        let mut evs: Vec<SensorEvent> = events
            .into_iter()
            .map(|(s, gap, dur)| {
                let start = cursor[s] + gap;
                cursor[s] = start + dur;
                SensorEvent {
                    event_id: 0,
                    sensor_id: format!("s{s}"),
                    start: Instant::from_millis(start),
                    end: Instant::from_millis(start + dur),
                }
            })
            .collect();
        evs.sort_by(|a, b| (a.start, a.end, &a.sensor_id).cmp(&(b.start, b.end, &b.sensor_id)));
        for (i, e) in evs.iter_mut().enumerate() {
            e.event_id = i as u64;
        }
        let mut t = BASE_MS;
        let anns: Vec<ActivityAnnotation> = annotations
            .into_iter()
            .enumerate()
            .map(|(i, (a, gap, dur))| {
                let start = t + gap;
                t = start + dur;
                ActivityAnnotation {
                    annotation_id: i as u64,
                    resident_id: "R1".into(),
                    activity_id: format!("a{a}"),
                    start: Instant::from_millis(start),
                    end: Instant::from_millis(start + dur),
                }
            })
            .collect();
        Dataset {
            name: "random".into(),
            timezone: parse_timezone(if madrid { "Europe/Madrid" } else { "UTC" }).unwrap(),
            sensors: (0..4)
                .map(|s| SensorMeta {
                    sensor_id: format!("s{s}"),
                    label: format!("sensor {s}"),
                    location: (s % 2 == 0).then(|| "Kitchen".to_string()),
                    kind: None,
                })
                .collect(),
            activities: (0..3).map(|a| ActivityMeta { activity_id: format!("a{a}"), label: format!("act {a}") }).collect(),
            residents: vec!["R1".into()],
            events: evs,
            annotations: anns,
        }
    })
}

/// Loads each uniform dataset directory and checks that re-rendering it
/// reproduces the files byte for byte.
pub fn check_roundtrip_dirs(dirs: &[&Path]) -> Result<(), String> {
    for dir in dirs {
        let dataset = load_uniform(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for (name, text) in render_uniform(&dataset) {
            let on_disk = std::fs::read(dir.join(name)).map_err(|e| e.to_string())?;
            if on_disk != text.as_bytes() {
                return Err(format!("{}/{name} differs after round trip", dir.display()));
            }
        }
    }
    Ok(())
}

/// Directories under `root` that hold a uniform dataset.
pub fn shipped_datasets(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out: Vec<_> = std::fs::read_dir(root)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("dataset.meta").is_file()).collect())
        .unwrap_or_default();
    out.sort();
    out
}

pub fn workspace_root() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}
