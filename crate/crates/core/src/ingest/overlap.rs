use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ActivityAnnotation, Instant};

/// Truncation remnants shorter than this are discarded.
pub const MIN_FRAGMENT_MILLIS: i64 = 1000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapStats {
    /// Input annotations whose span was shortened, split or removed.
    pub annotations_altered: usize,
    /// Extra pieces created when an annotation resumed after a later one ended.
    pub remainders_created: usize,
    pub fragments_dropped: usize,
}

/// Makes each resident's annotations pairwise disjoint.
///
/// Where annotations overlap, the one that starts later owns the shared
/// span (on equal starts, the one ending first). The earlier annotation is
/// truncated and, if it outlasts the later one, continues as a trailing
/// remainder with a fresh id. Truncated pieces under one second are dropped;
/// annotations that were not cut are kept whatever their length.
pub fn resolve_overlaps(annotations: &[ActivityAnnotation]) -> Vec<ActivityAnnotation> {
    resolve_overlaps_with_stats(annotations).0
}

pub fn resolve_overlaps_with_stats(
    annotations: &[ActivityAnnotation],
) -> (Vec<ActivityAnnotation>, OverlapStats) {
    let mut next_id = annotations.iter().map(|a| a.annotation_id + 1).max().unwrap_or(0);
    let mut by_resident: BTreeMap<&str, Vec<&ActivityAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_resident.entry(a.resident_id.as_str()).or_default().push(a);
    }

    let mut stats = OverlapStats::default();
    let mut out = Vec::with_capacity(annotations.len());
    for (_, mut group) in by_resident {
        group.retain(|a| a.end > a.start);
        group.sort_by_key(|a| (a.start, a.end, a.annotation_id));

        let pieces = winner_pieces(&group);
        let mut per_annotation: Vec<Vec<(Instant, Instant)>> = vec![Vec::new(); group.len()];
        for (idx, start, end) in pieces {
            per_annotation[idx].push((start, end));
        }

        for (idx, spans) in per_annotation.into_iter().enumerate() {
            let original = group[idx];
            if spans.len() == 1 && spans[0] == (original.start, original.end) {
                out.push(original.clone());
                continue;
            }
            stats.annotations_altered += 1;
            let mut first = true;
            for (start, end) in spans {
                if end.millis() - start.millis() < MIN_FRAGMENT_MILLIS {
                    stats.fragments_dropped += 1;
                    continue;
                }
                let annotation_id = if first {
                    original.annotation_id
                } else {
                    stats.remainders_created += 1;
                    next_id += 1;
                    next_id - 1
                };
                first = false;
                out.push(ActivityAnnotation {
                    annotation_id,
                    start,
                    end,
                    ..original.clone()
                });
            }
        }
    }
    out.sort_by_key(|a| (a.start, a.end, a.annotation_id));
    (out, stats)
}

/// Sweeps the elementary intervals between boundaries and returns maximal
/// `(annotation index, start, end)` runs owned by a single winner.
fn winner_pieces(group: &[&ActivityAnnotation]) -> Vec<(usize, Instant, Instant)> {
    let mut bounds: Vec<Instant> = group.iter().flat_map(|a| [a.start, a.end]).collect();
    bounds.sort();
    bounds.dedup();

    let mut pieces: Vec<(usize, Instant, Instant)> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut next = 0;
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        while next < group.len() && group[next].start <= lo {
            active.push(next);
            next += 1;
        }
        active.retain(|&i| group[i].end > lo);
        // later start wins, then shorter, then larger id
        let winner = active.iter().copied().max_by(|&x, &y| {
            let (a, b) = (group[x], group[y]);
            a.start
                .cmp(&b.start)
                .then(b.end.cmp(&a.end))
                .then(a.annotation_id.cmp(&b.annotation_id))
        });
        if let Some(idx) = winner {
            match pieces.last_mut() {
                Some(last) if last.0 == idx && last.2 == lo => last.2 = hi,
                _ => pieces.push((idx, lo, hi)),
            }
        }
    }
    pieces
}
