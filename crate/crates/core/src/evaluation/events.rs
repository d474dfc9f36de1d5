use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::model::{overlap_millis, ActivityAnnotation, Instant, IDLE};
use crate::segmentation::Segment;

/// Fixed-resolution frame labels. Frame `i` covers
/// `[start + i·resolution, start + (i+1)·resolution)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub start: Instant,
    pub resolution_ms: i64,
    pub labels: Vec<String>,
}

impl Timeline {
    pub fn end(&self) -> Instant {
        self.start.add_millis(self.resolution_ms * self.labels.len() as i64)
    }

    pub fn frame_start(&self, i: usize) -> Instant {
        self.start.add_millis(self.resolution_ms * i as i64)
    }

    /// Maximal runs of one non-Idle label as `(label, start, end)`.
    pub fn predicted_events(&self) -> Vec<(String, Instant, Instant)> {
        let mut out: Vec<(String, Instant, Instant)> = Vec::new();
        let mut i = 0;
        while i < self.labels.len() {
            let mut j = i;
            while j + 1 < self.labels.len() && self.labels[j + 1] == self.labels[i] {
                j += 1;
            }
            if self.labels[i] != IDLE {
                out.push((self.labels[i].clone(), self.frame_start(i), self.frame_start(j + 1)));
            }
            i = j + 1;
        }
        out
    }
}

/// Spreads segment predictions over frames spanning the first to the last
/// anchor; each frame takes the prediction of the nearest anchor, the
/// earlier one on ties.
pub fn build_timeline(
    segments: &[Segment],
    predictions: &[String],
    resolution_s: f64,
) -> Result<Timeline, EvaluationError> {
    if segments.is_empty() {
        return Err(EvaluationError::EmptySegments);
    }
    if segments.len() != predictions.len() {
        return Err(EvaluationError::LengthMismatch {
            truth: segments.len(),
            pred: predictions.len(),
        });
    }
    let resolution_ms = (resolution_s * 1000.0).round() as i64;
    if !(resolution_s > 0.0) || resolution_ms <= 0 {
        return Err(EvaluationError::InvalidResolution(resolution_s));
    }
    let first = segments[0].anchor;
    let last = segments[segments.len() - 1].anchor;
    let frames = ((last.millis() - first.millis()) / resolution_ms) as usize + 1;

    let mut labels = Vec::with_capacity(frames);
    let mut j = 0;
    for i in 0..frames {
        let t = first.millis() + resolution_ms * i as i64;
        while j + 1 < segments.len() && segments[j + 1].anchor.millis() <= t {
            j += 1;
        }
        let pick = match segments.get(j + 1) {
            Some(next) if next.anchor.millis() - t < t - segments[j].anchor.millis() => j + 1,
            _ => j,
        };
        labels.push(predictions[pick].clone());
    }
    Ok(Timeline { start: first, resolution_ms, labels })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub correct: usize,
    pub deletion: usize,
    pub insertion: usize,
    pub fragmentation: usize,
    /// Truth events sharing a single predicted event with another truth event.
    pub merge: usize,
}

impl EventCounts {
    pub fn truth_events(&self) -> usize {
        self.correct + self.deletion + self.fragmentation + self.merge
    }

    pub fn add(&mut self, other: &EventCounts) {
        self.correct += other.correct;
        self.deletion += other.deletion;
        self.insertion += other.insertion;
        self.fragmentation += other.fragmentation;
        self.merge += other.merge;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventErrorReport {
    pub counts: EventCounts,
    /// Seconds of matched truth events not covered by their predictions.
    pub underfill_s: f64,
    /// Seconds of matched predicted events lying outside every truth event
    /// of their class.
    pub overfill_s: f64,
    pub per_class: BTreeMap<String, EventCounts>,
}

/// Event-level comparison of a predicted timeline against ground truth.
///
/// Only labels listed in `classes` are analysed; Idle is never an event.
/// Every annotation must lie inside the timeline span.
pub fn event_error_analysis(
    timeline: &Timeline,
    annotations: &[ActivityAnnotation],
    classes: &[String],
) -> Result<EventErrorReport, EvaluationError> {
    let span = (timeline.start, timeline.end());
    if timeline.labels.is_empty() {
        return Err(EvaluationError::SpanMismatch("empty timeline".into()));
    }
    if let Some(a) = annotations.iter().find(|a| a.start < span.0 || a.end > span.1) {
        return Err(EvaluationError::SpanMismatch(format!(
            "annotation {} [{}, {}) outside timeline [{}, {})",
            a.annotation_id, a.start, a.end, span.0, span.1
        )));
    }
    let wanted: BTreeSet<&str> = classes.iter().map(String::as_str).filter(|c| *c != IDLE).collect();

    let predicted = timeline.predicted_events();
    let mut report = EventErrorReport::default();
    let mut underfill_ms = 0i64;
    let mut overfill_ms = 0i64;

    for class in &wanted {
        let truth: Vec<(Instant, Instant)> = annotations
            .iter()
            .filter(|a| a.activity_id == *class)
            .map(|a| (a.start, a.end))
            .collect();
        let preds: Vec<(Instant, Instant)> = predicted
            .iter()
            .filter(|(l, _, _)| l == class)
            .map(|&(_, s, e)| (s, e))
            .collect();
        let mut counts = EventCounts::default();

        for (ti, &t) in truth.iter().enumerate() {
            let hits: Vec<(Instant, Instant)> =
                preds.iter().copied().filter(|&p| overlap_millis(t, p) > 0).collect();
            match hits.len() {
                0 => counts.deletion += 1,
                1 => {
                    let p = hits[0];
                    let shared = truth
                        .iter()
                        .enumerate()
                        .any(|(oi, &o)| oi != ti && overlap_millis(o, p) > 0);
                    if shared {
                        counts.merge += 1;
                    } else {
                        counts.correct += 1;
                    }
                }
                _ => counts.fragmentation += 1,
            }
            if !hits.is_empty() {
                let covered: i64 = hits.iter().map(|&p| overlap_millis(t, p)).sum();
                underfill_ms += (t.1.millis() - t.0.millis()) - covered;
            }
        }
        for &p in &preds {
            let inside: i64 = truth.iter().map(|&t| overlap_millis(t, p)).sum();
            if inside == 0 {
                counts.insertion += 1;
            } else {
                overfill_ms += (p.1.millis() - p.0.millis()) - inside;
            }
        }
        report.counts.add(&counts);
        report.per_class.insert(class.to_string(), counts);
    }
    report.underfill_s = underfill_ms as f64 / 1000.0;
    report.overfill_s = overfill_ms as f64 / 1000.0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn s(x: i64) -> Instant {
        Instant::from_millis(x * 1000)
    }

    fn seg(anchor: i64) -> Segment {
        Segment {
            anchor: s(anchor),
            window_start: s(anchor - 30),
            window_end: s(anchor + 30),
            label: IDLE.into(),
            local_day: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        }
    }

    fn timeline(labels: Vec<String>) -> Timeline {
        Timeline { start: s(0), resolution_ms: 1000, labels }
    }

    fn ann(act: &str, a: i64, b: i64) -> ActivityAnnotation {
        ActivityAnnotation {
            annotation_id: 0,
            resident_id: "R1".into(),
            activity_id: act.into(),
            start: s(a),
            end: s(b),
        }
    }

    fn runs(label: &str, spans: &[(usize, usize)], n: usize) -> Vec<String> {
        let mut out = vec![IDLE.to_string(); n];
        for &(a, b) in spans {
            for slot in &mut out[a..b] {
                *slot = label.to_string();
            }
        }
        out
    }

    #[test]
    fn single_segment_timeline() {
        let t = build_timeline(&[seg(5)], &["A".into()], 1.0).unwrap();
        assert_eq!(t.labels, vec!["A"]);
    }

    #[test]
    fn nearest_anchor_with_earlier_tie() {
        let t = build_timeline(&[seg(0), seg(10)], &["A".into(), "B".into()], 1.0).unwrap();
        let expected: Vec<&str> = (0..=10).map(|i| if i <= 5 { "A" } else { "B" }).collect();
        assert_eq!(t.labels, expected);
    }

    #[test]
    fn coarse_resolution_single_frame() {
        let t = build_timeline(&[seg(0), seg(10)], &["A".into(), "B".into()], 60.0).unwrap();
        assert_eq!(t.labels, vec!["A"]);
        assert!(matches!(build_timeline(&[], &[], 1.0), Err(EvaluationError::EmptySegments)));
    }

    #[test]
    fn perfect_timeline_all_correct() {
        let tl = timeline(runs("c", &[(10, 30), (50, 60)], 100));
        let r = event_error_analysis(&tl, &[ann("c", 10, 30), ann("c", 50, 60)], &["c".into()]).unwrap();
        assert_eq!(r.counts, EventCounts { correct: 2, ..Default::default() });
        assert_eq!(r.underfill_s, 0.0);
        assert_eq!(r.overfill_s, 0.0);
    }

    #[test]
    fn fragmented_truth_event() {
        let tl = timeline(runs("c", &[(0, 40), (60, 100)], 100));
        let r = event_error_analysis(&tl, &[ann("c", 0, 100)], &["c".into()]).unwrap();
        assert_eq!(r.counts.fragmentation, 1);
        assert_eq!(r.underfill_s, 20.0);
    }

    #[test]
    fn insertion_and_deletion() {
        let tl = timeline(runs("c", &[(70, 80)], 100));
        let r = event_error_analysis(&tl, &[ann("c", 10, 20)], &["c".into()]).unwrap();
        assert_eq!(r.counts.insertion, 1);
        assert_eq!(r.counts.deletion, 1);
    }

    #[test]
    fn merged_truth_events() {
        let tl = timeline(runs("c", &[(10, 60)], 100));
        let r = event_error_analysis(&tl, &[ann("c", 10, 30), ann("c", 40, 60)], &["c".into()]).unwrap();
        assert_eq!(r.counts.merge, 2);
        assert_eq!(r.overfill_s, 10.0);
    }

    #[test]
    fn annotation_outside_span_rejected() {
        let tl = timeline(runs("c", &[], 10));
        assert!(matches!(
            event_error_analysis(&tl, &[ann("c", 5, 20)], &["c".into()]),
            Err(EvaluationError::SpanMismatch(_))
        ));
    }
}
