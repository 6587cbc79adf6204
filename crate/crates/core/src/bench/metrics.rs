//! Detection rates, bin coverage, mean percent error and scaled runtimes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::matching::MatchResult;
use super::DetectionRecord;
use crate::error::{Error, Result};
use crate::events::EventRecord;

pub const DEFAULT_BIN: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// `100 * matched / truths`.
    pub true_pct: f64,
    /// `100 * unmatched / detections`; 0 when there are no detections.
    pub false_pct: f64,
    pub no_detections: bool,
}

pub fn detection_rates(m: &MatchResult, truth_count: usize, detection_count: usize) -> Rates {
    let true_pct = if truth_count == 0 {
        0.0
    } else {
        100.0 * m.matched() as f64 / truth_count as f64
    };
    let (false_pct, no_detections) = if detection_count == 0 {
        (0.0, true)
    } else {
        (100.0 * m.unmatched_detections.len() as f64 / detection_count as f64, false)
    };
    Rates {
        true_pct,
        false_pct,
        no_detections,
    }
}

/// Anything occupying a half-open index span.
pub trait Span {
    fn span(&self) -> (usize, usize);
}

impl Span for EventRecord {
    fn span(&self) -> (usize, usize) {
        (self.start_index, self.end_index)
    }
}

impl Span for DetectionRecord {
    fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

impl Span for (usize, usize) {
    fn span(&self) -> (usize, usize) {
        *self
    }
}

/// Indices `b` of the bins `[b*size, (b+1)*size)` overlapped by any record.
pub fn bin_spans<S: Span>(records: &[S], bin_size: usize) -> BTreeSet<usize> {
    assert!(bin_size >= 1, "bin size must be at least 1");
    let mut out = BTreeSet::new();
    for r in records {
        let (s, e) = r.span();
        if e <= s {
            continue;
        }
        out.extend(s / bin_size..=(e - 1) / bin_size);
    }
    out
}

/// Bin-level comparison of predicted against true bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRates {
    /// `100 * |pred & truth| / |truth|`.
    pub true_pct: f64,
    /// `100 * |pred - truth| / |pred|`, the share of predicted bins that are wrong.
    pub false_of_predicted_pct: f64,
    /// `100 * |pred - truth| / |bins without events|`, the false-positive rate.
    pub false_positive_rate_pct: f64,
}

pub fn bin_rates(truth: &BTreeSet<usize>, predicted: &BTreeSet<usize>, total_bins: usize) -> BinRates {
    let hit = truth.intersection(predicted).count() as f64;
    let false_bins = predicted.difference(truth).count() as f64;
    let negatives = total_bins.saturating_sub(truth.len());
    let pct = |num: f64, den: usize| if den == 0 { 0.0 } else { 100.0 * num / den as f64 };
    BinRates {
        true_pct: pct(hit, truth.len()),
        false_of_predicted_pct: pct(false_bins, predicted.len()),
        false_positive_rate_pct: pct(false_bins, negatives),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpeField {
    Width,
    Amplitude,
}

/// Mean over matched pairs of `100 * |estimate - truth| / |truth|`. `None`
/// when nothing matched. True amplitudes are taken relative to `baseline`.
pub fn mean_percent_error(
    truth: &[EventRecord],
    detections: &[DetectionRecord],
    m: &MatchResult,
    field: MpeField,
    baseline: f64,
) -> Option<f64> {
    if m.pairs.is_empty() {
        return None;
    }
    let errs: Vec<f64> = m
        .pairs
        .iter()
        .filter_map(|&(i, j)| {
            let (t, e) = match field {
                MpeField::Width => (truth[i].width as f64, detections[j].width as f64),
                MpeField::Amplitude => (truth[i].amplitude(baseline), detections[j].amplitude),
            };
            (t != 0.0).then(|| 100.0 * (e - t).abs() / t.abs())
        })
        .collect();
    if errs.is_empty() {
        return None;
    }
    Some(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Runtime table: program -> file -> seconds.
pub type RuntimeTable = BTreeMap<String, BTreeMap<String, f64>>;

/// Per-file times divided by that file's fastest program, averaged per program.
pub fn scaled_runtimes(table: &RuntimeTable) -> Result<BTreeMap<String, f64>> {
    let files: BTreeSet<&String> = table.values().flat_map(|m| m.keys()).collect();
    let mut missing = Vec::new();
    for (prog, times) in table {
        for f in &files {
            if !times.contains_key(*f) {
                missing.push(format!("{prog}:{f}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::config(
            "runtimes",
            format!("missing runtime entries: {}", missing.join(", ")),
        ));
    }
    let mut minima = BTreeMap::new();
    for f in &files {
        let m = table.values().map(|t| t[*f]).fold(f64::INFINITY, f64::min);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::config("runtimes", format!("non-positive minimum runtime for {f}")));
        }
        minima.insert(*f, m);
    }
    Ok(table
        .iter()
        .map(|(prog, times)| {
            let mean = if files.is_empty() {
                1.0
            } else {
                files.iter().map(|f| times[*f] / minima[f]).sum::<f64>() / files.len() as f64
            };
            (prog.clone(), mean)
        })
        .collect())
}
