//! Scoring detector output against ground truth.

pub mod detector;
pub mod import;
pub mod matching;
pub mod metrics;
pub mod report;

use serde::{Deserialize, Serialize};

pub use detector::{threshold_detector, ThresholdDetector};
pub use import::{read_bins_csv, read_detections_csv, write_detections_csv, AmplitudeKind, ColumnMap};
pub use matching::{match_events, MatchResult, DEFAULT_TOLERANCE};
pub use metrics::{
    bin_rates, bin_spans, detection_rates, mean_percent_error, scaled_runtimes, BinRates, MpeField, Rates,
    RuntimeTable, DEFAULT_BIN,
};
pub use report::{BenchmarkReport, EventScore, FileScore, ProgramSummary, ScoreInput};

/// One detected event. `end` is exclusive, like [`crate::EventRecord`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub start: usize,
    pub end: usize,
    pub width: usize,
    /// Blockade depth, nA. NaN when the detector does not report one.
    pub amplitude: f64,
}

impl DetectionRecord {
    pub fn new(start: usize, end: usize, amplitude: f64) -> Self {
        Self {
            start,
            end,
            width: end - start,
            amplitude,
        }
    }
}

impl From<&crate::EventRecord> for DetectionRecord {
    fn from(r: &crate::EventRecord) -> Self {
        Self {
            start: r.start_index,
            end: r.end_index,
            width: r.width,
            amplitude: f64::NAN,
        }
    }
}
