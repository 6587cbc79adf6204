//! One-to-one event matching within a start/end tolerance.

use serde::{Deserialize, Serialize};

use super::DetectionRecord;
use crate::events::EventRecord;

/// Default tolerance, data points, on both the start and the end index.
pub const DEFAULT_TOLERANCE: usize = 10;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `(truth index, detection index)`, ordered by truth index.
    pub pairs: Vec<(usize, usize)>,
    /// Detections with no truth partner (false detections).
    pub unmatched_detections: Vec<usize>,
    /// Truths with no detection partner.
    pub missed_truths: Vec<usize>,
}

impl MatchResult {
    pub fn matched(&self) -> usize {
        self.pairs.len()
    }
}

#[inline]
pub fn compatible(t: &EventRecord, d: &DetectionRecord, tol: usize) -> bool {
    t.start_index.abs_diff(d.start) <= tol && t.end_index.abs_diff(d.end) <= tol
}

/// Match detections to truths.
///
/// Detections are visited in increasing start order and each takes the free
/// compatible truth with the nearest start (ties to the earlier truth). An
/// augmenting-path pass then repairs the rare cases, only possible when
/// tolerance windows of short neighbouring events overlap, where a greedy
/// choice blocks a later detection, so the number of pairs is always the
/// maximum achievable.
pub fn match_events(truth: &[EventRecord], detections: &[DetectionRecord], tol: usize) -> MatchResult {
    // Candidate truths per detection. Truth starts are sorted, so the start
    // window is located by binary search.
    let mut t_order: Vec<usize> = (0..truth.len()).collect();
    t_order.sort_by_key(|&i| (truth[i].start_index, truth[i].end_index));
    let starts: Vec<usize> = t_order.iter().map(|&i| truth[i].start_index).collect();

    let mut d_order: Vec<usize> = (0..detections.len()).collect();
    d_order.sort_by_key(|&j| (detections[j].start, detections[j].end));

    let candidates: Vec<Vec<usize>> = (0..detections.len())
        .map(|j| {
            let d = &detections[j];
            let lo = starts.partition_point(|&s| s + tol < d.start);
            let mut c: Vec<usize> = t_order[lo..]
                .iter()
                .take_while(|&&i| truth[i].start_index <= d.start + tol)
                .copied()
                .filter(|&i| compatible(&truth[i], d, tol))
                .collect();
            c.sort_by_key(|&i| (truth[i].start_index.abs_diff(d.start), truth[i].start_index, i));
            c
        })
        .collect();

    let mut truth_of_det: Vec<Option<usize>> = vec![None; detections.len()];
    let mut det_of_truth: Vec<Option<usize>> = vec![None; truth.len()];

    for &j in &d_order {
        if let Some(&i) = candidates[j].iter().find(|&&i| det_of_truth[i].is_none()) {
            det_of_truth[i] = Some(j);
            truth_of_det[j] = Some(i);
        }
    }

    // Kuhn augmentation from each unmatched detection.
    for &j in &d_order {
        if truth_of_det[j].is_some() || candidates[j].is_empty() {
            continue;
        }
        let mut visited = vec![false; truth.len()];
        augment(j, &candidates, &mut visited, &mut det_of_truth, &mut truth_of_det);
    }

    let mut pairs: Vec<(usize, usize)> = det_of_truth
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|j| (i, j)))
        .collect();
    pairs.sort_unstable();
    MatchResult {
        pairs,
        unmatched_detections: (0..detections.len()).filter(|&j| truth_of_det[j].is_none()).collect(),
        missed_truths: (0..truth.len()).filter(|&i| det_of_truth[i].is_none()).collect(),
    }
}

fn augment(
    j: usize,
    candidates: &[Vec<usize>],
    visited: &mut [bool],
    det_of_truth: &mut [Option<usize>],
    truth_of_det: &mut [Option<usize>],
) -> bool {
    for &i in &candidates[j] {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let free = match det_of_truth[i] {
            None => true,
            Some(other) => augment(other, candidates, visited, det_of_truth, truth_of_det),
        };
        if free {
            det_of_truth[i] = Some(j);
            truth_of_det[j] = Some(i);
            return true;
        }
    }
    false
}
