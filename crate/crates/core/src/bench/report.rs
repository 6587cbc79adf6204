//! Per-file scores, per-program summaries and their CSV/JSON forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matching::match_events;
use super::metrics::{
    bin_rates, bin_spans, detection_rates, mean_percent_error, scaled_runtimes, BinRates, MpeField, RuntimeTable,
};
use super::DetectionRecord;
use crate::error::{csv_err, Error, Result};
use crate::events::EventRecord;

/// Event-level scores; absent when a detector only reports bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventScore {
    pub detections: usize,
    pub matched: usize,
    pub true_pct: f64,
    pub false_pct: f64,
    pub no_detections: bool,
    pub mpe_width_pct: Option<f64>,
    pub mpe_amplitude_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileScore {
    pub program: String,
    pub file: String,
    pub truths: usize,
    pub event: Option<EventScore>,
    pub bins: BinRates,
    /// Wall-clock seconds of the detector call only.
    pub runtime_s: Option<f64>,
}

pub struct ScoreInput<'a> {
    pub program: &'a str,
    pub file: &'a str,
    pub truth: &'a [EventRecord],
    /// Open-pore baseline the truth currents are measured from.
    pub baseline: f64,
    pub signal_len: usize,
    pub tolerance: usize,
    pub bin_size: usize,
    pub runtime_s: Option<f64>,
}

impl ScoreInput<'_> {
    fn total_bins(&self) -> usize {
        self.signal_len.div_ceil(self.bin_size)
    }

    /// Score an event table.
    pub fn events(&self, detections: &[DetectionRecord]) -> FileScore {
        let m = match_events(self.truth, detections, self.tolerance);
        let rates = detection_rates(&m, self.truth.len(), detections.len());
        let amp_known = detections.iter().all(|d| d.amplitude.is_finite());
        let event = EventScore {
            detections: detections.len(),
            matched: m.matched(),
            true_pct: rates.true_pct,
            false_pct: rates.false_pct,
            no_detections: rates.no_detections,
            mpe_width_pct: mean_percent_error(self.truth, detections, &m, MpeField::Width, self.baseline),
            mpe_amplitude_pct: if amp_known {
                mean_percent_error(self.truth, detections, &m, MpeField::Amplitude, self.baseline)
            } else {
                None
            },
        };
        let truth_bins = bin_spans(self.truth, self.bin_size);
        let pred_bins = bin_spans(detections, self.bin_size);
        FileScore {
            program: self.program.to_string(),
            file: self.file.to_string(),
            truths: self.truth.len(),
            event: Some(event),
            bins: bin_rates(&truth_bins, &pred_bins, self.total_bins()),
            runtime_s: self.runtime_s,
        }
    }

    /// Score a set of predicted bin indices.
    pub fn bins(&self, predicted: &BTreeSet<usize>) -> FileScore {
        let truth_bins = bin_spans(self.truth, self.bin_size);
        FileScore {
            program: self.program.to_string(),
            file: self.file.to_string(),
            truths: self.truth.len(),
            event: None,
            bins: bin_rates(&truth_bins, predicted, self.total_bins()),
            runtime_s: self.runtime_s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramSummary {
    pub program: String,
    pub files: usize,
    pub mean_true_pct: Option<f64>,
    pub mean_false_pct: Option<f64>,
    pub mean_mpe_width_pct: Option<f64>,
    pub mean_mpe_amplitude_pct: Option<f64>,
    pub mean_bin_true_pct: f64,
    pub mean_bin_false_of_predicted_pct: f64,
    pub mean_bin_false_positive_rate_pct: f64,
    pub mean_runtime_s: Option<f64>,
    pub mean_scaled_runtime: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub tolerance: usize,
    pub bin_size: usize,
    pub files: Vec<FileScore>,
    pub programs: Vec<ProgramSummary>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl BenchmarkReport {
    /// Summaries per program. Scaled runtimes are computed when every
    /// program has a runtime for every file.
    pub fn new(files: Vec<FileScore>, tolerance: usize, bin_size: usize) -> Result<Self> {
        let mut by_prog: BTreeMap<&str, Vec<&FileScore>> = BTreeMap::new();
        for f in &files {
            by_prog.entry(&f.program).or_default().push(f);
        }

        let all_timed = files.iter().all(|f| f.runtime_s.is_some());
        let scaled = if all_timed && !files.is_empty() {
            let mut table = RuntimeTable::new();
            for f in &files {
                table
                    .entry(f.program.clone())
                    .or_default()
                    .insert(f.file.clone(), f.runtime_s.unwrap_or_default());
            }
            Some(scaled_runtimes(&table)?)
        } else {
            None
        };

        let programs = by_prog
            .into_iter()
            .map(|(prog, scores)| {
                let ev = |f: fn(&EventScore) -> Option<f64>| {
                    mean_of(scores.iter().map(|s| s.event.as_ref().and_then(f)))
                };
                let n = scores.len() as f64;
                ProgramSummary {
                    program: prog.to_string(),
                    files: scores.len(),
                    mean_true_pct: ev(|e| Some(e.true_pct)),
                    mean_false_pct: ev(|e| Some(e.false_pct)),
                    mean_mpe_width_pct: ev(|e| e.mpe_width_pct),
                    mean_mpe_amplitude_pct: ev(|e| e.mpe_amplitude_pct),
                    mean_bin_true_pct: scores.iter().map(|s| s.bins.true_pct).sum::<f64>() / n,
                    mean_bin_false_of_predicted_pct: scores.iter().map(|s| s.bins.false_of_predicted_pct).sum::<f64>()
                        / n,
                    mean_bin_false_positive_rate_pct: scores
                        .iter()
                        .map(|s| s.bins.false_positive_rate_pct)
                        .sum::<f64>()
                        / n,
                    mean_runtime_s: mean_of(scores.iter().map(|s| s.runtime_s)),
                    mean_scaled_runtime: scaled.as_ref().and_then(|m| m.get(prog).copied()),
                }
            })
            .collect();
        Ok(Self {
            tolerance,
            bin_size,
            files,
            programs,
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// One row per file.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record([
            "program",
            "file",
            "truths",
            "detections",
            "matched",
            "true_pct",
            "false_pct",
            "mpe_width_pct",
            "mpe_amplitude_pct",
            "bin_true_pct",
            "bin_false_of_predicted_pct",
            "bin_false_positive_rate_pct",
            "runtime_s",
        ])
        .map_err(|e| csv_err(path, e))?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for f in &self.files {
            let e = f.event.as_ref();
            w.write_record([
                f.program.clone(),
                f.file.clone(),
                f.truths.to_string(),
                e.map(|e| e.detections.to_string()).unwrap_or_default(),
                e.map(|e| e.matched.to_string()).unwrap_or_default(),
                opt(e.map(|e| e.true_pct)),
                opt(e.map(|e| e.false_pct)),
                opt(e.and_then(|e| e.mpe_width_pct)),
                opt(e.and_then(|e| e.mpe_amplitude_pct)),
                f.bins.true_pct.to_string(),
                f.bins.false_of_predicted_pct.to_string(),
                f.bins.false_positive_rate_pct.to_string(),
                opt(f.runtime_s),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Human-readable per-program table.
    pub fn summary_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:>5} {:>8} {:>8} {:>9} {:>9} {:>8} {:>8} {:>8} {:>9}",
            "program", "files", "true%", "false%", "mpeW%", "mpeA%", "binT%", "binF%", "binFPR%", "scaledT"
        );
        for p in &self.programs {
            let _ = writeln!(
                s,
                "{:<16} {:>5} {:>8} {:>8} {:>9} {:>9} {:>8.2} {:>8.2} {:>8.2} {:>9}",
                p.program,
                p.files,
                fmt(p.mean_true_pct),
                fmt(p.mean_false_pct),
                fmt(p.mean_mpe_width_pct),
                fmt(p.mean_mpe_amplitude_pct),
                p.mean_bin_true_pct,
                p.mean_bin_false_of_predicted_pct,
                p.mean_bin_false_positive_rate_pct,
                fmt(p.mean_scaled_runtime),
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> Vec<EventRecord> {
        (0..10)
            .map(|i| EventRecord {
                start_index: 3000 * i + 500,
                end_index: 3000 * i + 560,
                width: 60,
                mean_current: 27.0,
                level_currents: [27.0; 4],
                level_widths: [60, 0, 0, 0],
            })
            .collect()
    }

    fn input<'a>(t: &'a [EventRecord], prog: &'a str, runtime: f64) -> ScoreInput<'a> {
        ScoreInput {
            program: prog,
            file: "f",
            truth: t,
            baseline: 30.0,
            signal_len: 30_000,
            tolerance: 10,
            bin_size: 1024,
            runtime_s: Some(runtime),
        }
    }

    #[test]
    fn self_score_is_perfect() {
        let t = truth();
        let dets: Vec<DetectionRecord> = t
            .iter()
            .map(|r| DetectionRecord::new(r.start_index, r.end_index, r.amplitude(30.0)))
            .collect();
        let s = input(&t, "oracle", 1.0).events(&dets);
        let e = s.event.unwrap();
        assert_eq!((e.true_pct, e.false_pct), (100.0, 0.0));
        assert_eq!(e.mpe_width_pct, Some(0.0));
        assert_eq!(e.mpe_amplitude_pct, Some(0.0));
        assert_eq!(s.bins.true_pct, 100.0);
        assert_eq!(s.bins.false_of_predicted_pct, 0.0);
    }

    #[test]
    fn report_summaries_and_files() {
        let t = truth();
        let dets: Vec<DetectionRecord> = t.iter().map(DetectionRecord::from).collect();
        let a = input(&t, "a", 2.0).events(&dets);
        let b = input(&t, "b", 4.0).events(&dets[..5]);
        let report = BenchmarkReport::new(vec![a, b], 10, 1024).unwrap();
        assert_eq!(report.programs.len(), 2);
        assert_eq!(report.programs[0].mean_scaled_runtime, Some(1.0));
        assert_eq!(report.programs[1].mean_scaled_runtime, Some(2.0));
        assert_eq!(report.programs[1].mean_true_pct, Some(50.0));
        assert_eq!(report.programs[0].mean_mpe_amplitude_pct, None);
        assert!(report.summary_table().contains("100.00"));

        let dir = tempfile::tempdir().unwrap();
        report.write_csv(&dir.path().join("r.csv")).unwrap();
        report.write_json(&dir.path().join("r.json")).unwrap();
        let back: BenchmarkReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn bins_only_score() {
        let t = truth();
        let pred = bin_spans(&t, 1024);
        let s = input(&t, "cnn", 1.0).bins(&pred);
        assert!(s.event.is_none());
        assert_eq!(s.bins.true_pct, 100.0);
        assert_eq!(s.bins.false_positive_rate_pct, 0.0);
    }
}
