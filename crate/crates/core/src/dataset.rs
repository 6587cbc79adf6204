//! Labelled fixed-length segments for training classifiers.
//!
//! Each segment is cut from its own generated trace. Generation parameters
//! are drawn per segment from the ranges in [`DatasetSpec`]; the manifest
//! row records everything needed to regenerate the trace and the window.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{csv_err, Error, Result};
use crate::events::{EventConfig, EventRecord, PlacementConfig};
use crate::io::write_signal_csv;
use crate::noise::NoiseConfig;
use crate::pipeline::{assemble, time_axis, ColumnFlags, GenerationConfig, SignalBundle, DEFAULT_SAMPFREQ};
use crate::rng::{derive_seed, stream, Stream};

pub const SEGMENT_LEN: usize = 1024;
pub const MANIFEST: &str = "manifest.csv";
pub const SEGMENT_DIR: &str = "segments";

/// Inclusive range a parameter is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub lo: T,
    pub hi: T,
}

impl<T> Bounds<T> {
    pub const fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub count: usize,
    pub segment_len: usize,
    pub seed: u64,
    pub sampfreq: f64,
    /// Event depth, nA. Each segment draws its own sub-range from this.
    pub amplitude: Bounds<f64>,
    /// Event width, points. Each segment draws its own sub-range from this.
    pub width: Bounds<usize>,
    /// Percent of the trace covered by events.
    pub density: Bounds<f64>,
    pub nsigma: Bounds<f64>,
    pub vshift: Bounds<f64>,
    /// Traces tried per segment before the ranges are declared unsatisfiable.
    pub max_attempts: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            count: 1000,
            segment_len: SEGMENT_LEN,
            seed: 0,
            sampfreq: DEFAULT_SAMPFREQ,
            amplitude: Bounds::new(1.0, 5.0),
            width: Bounds::new(10, 300),
            density: Bounds::new(0.5, 10.0),
            nsigma: Bounds::new(3.0, 10.0),
            vshift: Bounds::new(10.0, 40.0),
            max_attempts: 32,
        }
    }
}

fn check_f64(field: &'static str, b: Bounds<f64>, min: f64, max: f64) -> Result<()> {
    if !(b.lo.is_finite() && b.hi.is_finite()) || b.lo > b.hi || b.lo < min || b.hi > max {
        return Err(Error::config(
            field,
            format!("range [{}, {}] must be ordered and lie within [{min}, {max}]", b.lo, b.hi),
        ));
    }
    Ok(())
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::config("count", "must be at least 1"));
        }
        if self.segment_len < 8 {
            return Err(Error::config("segment_len", "must be at least 8"));
        }
        if !(self.sampfreq > 0.0 && self.sampfreq.is_finite()) {
            return Err(Error::config("sampfreq", "must be > 0"));
        }
        check_f64("amplitude", self.amplitude, f64::MIN_POSITIVE, f64::MAX)?;
        check_f64("density", self.density, f64::MIN_POSITIVE, 100.0)?;
        check_f64("nsigma", self.nsigma, f64::MIN_POSITIVE, f64::MAX)?;
        check_f64("vshift", self.vshift, f64::MIN, f64::MAX)?;
        if self.width.lo == 0 || self.width.lo > self.width.hi {
            return Err(Error::config("width", "range must be ordered with a minimum of at least 1"));
        }
        if self.max_attempts == 0 {
            return Err(Error::config("max_attempts", "must be at least 1"));
        }
        Ok(())
    }
}

/// One manifest row; enough to regenerate the segment exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    /// Path relative to the dataset directory.
    pub file: String,
    pub label: u8,
    /// Seed of the source trace.
    pub seed: u64,
    pub segment_len: usize,
    /// First sample of the window within the source trace.
    pub offset: usize,
    pub numpulses: usize,
    pub mincurr: f64,
    pub maxcurr: f64,
    pub minpwd: usize,
    pub maxpwd: usize,
    pub density: f64,
    pub nsigma: f64,
    pub vshift: f64,
    pub sampfreq: f64,
}

/// A regenerated segment with the ground truth of its source trace.
#[derive(Clone, Debug)]
pub struct Segment {
    pub current: Vec<f64>,
    pub clean: Vec<f64>,
    /// Source-trace events overlapping the window, absolute indices.
    pub records: Vec<EventRecord>,
}

impl SegmentRow {
    pub fn config(&self) -> GenerationConfig {
        GenerationConfig {
            name: "segment".into(),
            seed: self.seed,
            sampfreq: self.sampfreq,
            vshift: self.vshift,
            events: EventConfig {
                numpulses: self.numpulses,
                mincurr: self.mincurr,
                maxcurr: self.maxcurr,
                minpwd: self.minpwd,
                maxpwd: self.maxpwd,
                ..EventConfig::default()
            },
            placement: PlacementConfig {
                event_density_factor: self.density,
                ..PlacementConfig::default()
            },
            noise: NoiseConfig {
                nsigma: self.nsigma,
                ..NoiseConfig::default()
            },
            columns: ColumnFlags {
                clean: true,
                ..ColumnFlags::none()
            },
            ..GenerationConfig::default()
        }
    }

    pub fn window(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.segment_len
    }

    /// Rebuild the source trace and cut the window again.
    pub fn regenerate(&self) -> Result<Segment> {
        let g = assemble::<f64>(&self.config())?;
        let w = self.window();
        if w.end > g.bundle.len() {
            return Err(Error::Internal(format!(
                "window {w:?} exceeds trace length {}",
                g.bundle.len()
            )));
        }
        let clean = g.bundle.clean.as_ref().map(|c| c[w.clone()].to_vec()).unwrap_or_default();
        Ok(Segment {
            current: g.bundle.current[w.clone()].to_vec(),
            clean,
            records: g
                .records
                .into_iter()
                .filter(|r| overlaps(r, &w))
                .collect(),
        })
    }
}

fn overlaps(r: &EventRecord, w: &std::ops::Range<usize>) -> bool {
    r.start_index < w.end && r.end_index > w.start
}

/// Label from ground truth: 1 when any event sample falls in the window.
pub fn label_from_records(records: &[EventRecord], window: std::ops::Range<usize>) -> u8 {
    u8::from(records.iter().any(|r| overlaps(r, &window)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentDatasetManifest {
    pub segment_len: usize,
    pub rows: Vec<SegmentRow>,
}

impl SegmentDatasetManifest {
    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label == 1).count()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        for r in &self.rows {
            w.serialize(r).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let rows = r
            .deserialize::<SegmentRow>()
            .enumerate()
            .map(|(i, row)| {
                let row = row.map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    row: i + 1,
                    message: e.to_string(),
                })?;
                if row.label > 1 {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: i + 1,
                        message: format!("label {} is not 0 or 1", row.label),
                    });
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        let segment_len = rows.first().map_or(SEGMENT_LEN, |r| r.segment_len);
        if rows.iter().any(|r| r.segment_len != segment_len) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: 0,
                message: "mixed segment lengths".into(),
            });
        }
        Ok(Self { segment_len, rows })
    }
}

fn draw_pair<R: Rng + ?Sized>(b: Bounds<f64>, rng: &mut R) -> (f64, f64) {
    let x = rng.random_range(b.lo..=b.hi);
    let y = rng.random_range(b.lo..=b.hi);
    (x.min(y), x.max(y))
}

/// Offsets whose window holds (or avoids) event samples, as inclusive ranges.
fn candidate_offsets(records: &[EventRecord], len: usize, seg: usize, positive: bool) -> Vec<(usize, usize)> {
    let last = len - seg;
    if positive {
        records
            .iter()
            .map(|r| ((r.start_index + 1).saturating_sub(seg), (r.end_index - 1).min(last)))
            .collect()
    } else {
        let mut free = Vec::new();
        let mut cursor = 0;
        for r in records.iter().map(|r| r.start_index..r.end_index).chain([len..len]) {
            if r.start >= cursor + seg {
                free.push((cursor, r.start - seg));
            }
            cursor = cursor.max(r.end);
        }
        free
    }
}

fn pick_offset<R: Rng + ?Sized>(ranges: &[(usize, usize)], rng: &mut R) -> Option<usize> {
    let total: usize = ranges.iter().map(|(a, b)| b - a + 1).sum();
    if total == 0 {
        return None;
    }
    let mut k = rng.random_range(0..total);
    for &(a, b) in ranges {
        let n = b - a + 1;
        if k < n {
            return Some(a + k);
        }
        k -= n;
    }
    None
}

/// Find a trace and window for segment `index` with the requested label.
pub fn plan_segment(spec: &DatasetSpec, index: usize, label: u8) -> Result<SegmentRow> {
    let mut rng = stream(derive_seed(spec.seed, index as u64), Stream::Dataset);
    let seg = spec.segment_len;
    for _ in 0..spec.max_attempts {
        let (mincurr, maxcurr) = draw_pair(spec.amplitude, &mut rng);
        let w0 = rng.random_range(spec.width.lo..=spec.width.hi);
        let w1 = rng.random_range(spec.width.lo..=spec.width.hi);
        let (minpwd, maxpwd) = (w0.min(w1), w0.max(w1));
        let density = rng.random_range(spec.density.lo..=spec.density.hi);
        let nsigma = rng.random_range(spec.nsigma.lo..=spec.nsigma.hi);
        let vshift = rng.random_range(spec.vshift.lo..=spec.vshift.hi);
        // Aim for a source trace of roughly four windows.
        let mean_w = 0.5 * (minpwd + maxpwd) as f64;
        let numpulses = ((4.0 * seg as f64 * density / 100.0) / mean_w).ceil().clamp(1.0, 10_000.0) as usize;
        let mut row = SegmentRow {
            file: format!("{SEGMENT_DIR}/seg_{index:06}.csv"),
            label,
            seed: rng.random(),
            segment_len: seg,
            offset: 0,
            numpulses,
            mincurr,
            maxcurr,
            minpwd,
            maxpwd,
            density,
            nsigma,
            vshift,
            sampfreq: spec.sampfreq,
        };
        // Placement is independent of noise and filters.
        let g = assemble::<f64>(&GenerationConfig {
            columns: ColumnFlags::none(),
            ..row.config().events_only()
        })?;
        let len = g.bundle.len();
        if len < seg {
            continue;
        }
        let ranges = candidate_offsets(&g.records, len, seg, label == 1);
        if let Some(offset) = pick_offset(&ranges, &mut rng) {
            row.offset = offset;
            return Ok(row);
        }
    }
    Err(Error::config(
        "density",
        format!(
            "no {} window of {seg} points found after {} traces; widen the ranges",
            if label == 1 { "event-bearing" } else { "event-free" },
            spec.max_attempts
        ),
    ))
}

/// Balanced labels: `count / 2` positives (rounded up), shuffled.
pub fn balanced_labels(count: usize, seed: u64) -> Vec<u8> {
    let positives = count.div_ceil(2);
    let mut labels: Vec<u8> = (0..count).map(|i| u8::from(i < positives)).collect();
    labels.shuffle(&mut stream(seed, Stream::Dataset));
    labels
}

fn write_segment(dir: &Path, row: &SegmentRow) -> Result<()> {
    let s = row.regenerate()?;
    if label_from_records(&s.records, row.window()) != row.label {
        return Err(Error::Internal(format!("{}: label disagrees with regenerated trace", row.file)));
    }
    let fs = row.sampfreq;
    let bundle = SignalBundle {
        sampfreq: fs,
        time: time_axis(row.segment_len, fs)
            .into_iter()
            .map(|t| t + row.offset as f64 / fs)
            .collect(),
        current: s.current,
        clean: Some(s.clean),
        filtered: None,
        drift: None,
        noise: None,
    };
    write_signal_csv(&bundle, &dir.join(&row.file))
}

/// Write `count` segment CSVs (`Time,Current,Clean`) and `manifest.csv` into `dir`.
pub fn generate_ml_dataset(dir: &Path, spec: &DatasetSpec) -> Result<SegmentDatasetManifest> {
    spec.validate()?;
    let seg_dir: PathBuf = dir.join(SEGMENT_DIR);
    std::fs::create_dir_all(&seg_dir).map_err(|e| Error::io(&seg_dir, e))?;
    let labels = balanced_labels(spec.count, spec.seed);
    let rows = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let row = plan_segment(spec, i, label)?;
            write_segment(dir, &row)?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = SegmentDatasetManifest {
        segment_len: spec.segment_len,
        rows,
    };
    manifest.write(&dir.join(MANIFEST))?;
    Ok(manifest)
}
