//! The 105-file benchmark corpus: 5 densities x 3 noise levels x 7 baselines,
//! each file holding 100 single-level events of depth 3 nA.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{csv_err, Error, Result};
use crate::events::{EventConfig, GapDistribution, MultilevelMode, PlacementConfig};
use crate::filters::FilterConfig;
use crate::io::{write_run, RunFiles};
use crate::noise::NoiseConfig;
use crate::pipeline::{assemble, ColumnFlags, GenerationConfig, DEFAULT_SAMPFREQ};
use crate::rng::derive_seed;

pub const DENSITIES: [f64; 5] = [0.1, 0.5, 1.0, 5.0, 10.0];
pub const NSIGMAS: [f64; 3] = [3.0, 5.0, 7.0];
pub const VSHIFTS: [f64; 7] = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];
pub const EVENTS_PER_FILE: usize = 100;
pub const DEPTH: f64 = 3.0;
pub const MANIFEST: &str = "manifest.csv";

/// Width bounds (points) used at a given density.
pub fn width_range(density: f64) -> (usize, usize) {
    if density >= 10.0 {
        (100, 1000)
    } else {
        (10, 100)
    }
}

/// Which flavour of each corpus file to write.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Filtered events plus calibrated noise; writes a `Noise` column.
    #[default]
    Standard,
    /// Events on the baseline only.
    Noiseless,
}

/// One manifest row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub file: String,
    pub density: f64,
    pub nsigma: f64,
    pub vshift: f64,
    pub seed: u64,
    pub events: usize,
    pub depth: f64,
    pub minpwd: usize,
    pub maxpwd: usize,
    pub sampfreq: f64,
    pub rc_k: f64,
    pub cutoff_hz: f64,
    pub variant: Variant,
    /// Trace length, known once the file has been generated.
    pub samples: Option<usize>,
}

impl CorpusEntry {
    pub fn config(&self) -> GenerationConfig {
        let filter = FilterConfig::default();
        let cfg = GenerationConfig {
            name: self.file.clone(),
            seed: self.seed,
            sampfreq: self.sampfreq,
            vshift: self.vshift,
            events: EventConfig {
                numpulses: self.events,
                mincurr: self.depth,
                maxcurr: self.depth,
                minpwd: self.minpwd,
                maxpwd: self.maxpwd,
                multilevel: MultilevelMode::Single,
                ..EventConfig::default()
            },
            placement: PlacementConfig {
                dist: GapDistribution::Exponential,
                event_density_factor: self.density,
            },
            noise: NoiseConfig {
                nsigma: self.nsigma,
                ..NoiseConfig::default()
            },
            filter: FilterConfig {
                capacitance: 1.0 / (self.rc_k * self.sampfreq * filter.resistance),
                cutoff: self.cutoff_hz,
                ..filter
            },
            columns: ColumnFlags {
                noise: true,
                ..ColumnFlags::none()
            },
            ..GenerationConfig::default()
        };
        match self.variant {
            Variant::Standard => cfg,
            Variant::Noiseless => GenerationConfig {
                columns: ColumnFlags::none(),
                ..cfg.events_only()
            },
        }
    }

    pub fn files(&self, dir: &Path) -> RunFiles {
        RunFiles::in_dir(dir, &self.file)
    }
}

/// The full grid in a fixed order, with per-file seeds derived from `seed`.
pub fn plan(seed: u64, variant: Variant) -> Vec<CorpusEntry> {
    let filter = FilterConfig::default();
    let mut out = Vec::with_capacity(DENSITIES.len() * NSIGMAS.len() * VSHIFTS.len());
    for &density in &DENSITIES {
        let (minpwd, maxpwd) = width_range(density);
        for &nsigma in &NSIGMAS {
            for &vshift in &VSHIFTS {
                let index = out.len();
                out.push(CorpusEntry {
                    file: format!("signal_{index:03}"),
                    density,
                    nsigma,
                    vshift,
                    seed: derive_seed(seed, index as u64),
                    events: EVENTS_PER_FILE,
                    depth: DEPTH,
                    minpwd,
                    maxpwd,
                    sampfreq: DEFAULT_SAMPFREQ,
                    rc_k: filter.rc_ratio(DEFAULT_SAMPFREQ),
                    cutoff_hz: filter.cutoff,
                    variant,
                    samples: None,
                });
            }
        }
    }
    out
}

/// Generate and write one corpus file, returning the entry with its length filled in.
pub fn write_entry(dir: &Path, entry: &CorpusEntry) -> Result<CorpusEntry> {
    let cfg = entry.config();
    let generated = assemble::<f64>(&cfg)?;
    write_run(dir, &cfg, &generated)?;
    Ok(CorpusEntry {
        samples: Some(generated.bundle.len()),
        ..entry.clone()
    })
}

/// Write every file of `entries` and the manifest into `dir`.
pub fn build(dir: &Path, entries: &[CorpusEntry]) -> Result<Vec<CorpusEntry>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let written = entries
        .par_iter()
        .map(|e| write_entry(dir, e))
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&written, &dir.join(MANIFEST))?;
    Ok(written)
}

/// Build the standard corpus into `dir`.
pub fn build_benchmark_corpus(dir: &Path, seed: u64) -> Result<Vec<CorpusEntry>> {
    build(dir, &plan(seed, Variant::Standard))
}

pub fn write_manifest(entries: &[CorpusEntry], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for e in entries {
        w.serialize(e).map_err(|err| csv_err(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a manifest written by [`write_manifest`].
pub fn read_manifest(path: &Path) -> Result<Vec<CorpusEntry>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::signal_length;
    use crate::io::{read_event_details_csv, scan_column};

    #[test]
    fn grid_shape() {
        let p = plan(1, Variant::Standard);
        assert_eq!(p.len(), 105);
        assert!(p.iter().filter(|e| e.density == 10.0).all(|e| (e.minpwd, e.maxpwd) == (100, 1000)));
        assert!(p.iter().filter(|e| e.density < 10.0).all(|e| (e.minpwd, e.maxpwd) == (10, 100)));
        let mut seeds: Vec<u64> = p.iter().map(|e| e.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 105);
        assert!(p.iter().all(|e| (e.rc_k - 0.25).abs() < 1e-12 && e.config().validate().is_ok()));
    }

    #[test]
    fn single_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let entry = plan(4, Variant::Standard).into_iter().find(|e| e.density == 10.0).unwrap();
        let built = build(dir.path(), std::slice::from_ref(&entry)).unwrap();
        let files = entry.files(dir.path());
        let recs = read_event_details_csv(&files.details).unwrap();
        assert_eq!(recs.len(), 100);
        assert!(recs.iter().all(|r| (100..=1000).contains(&r.width)));
        assert!(recs.iter().all(|r| (r.amplitude(entry.vshift) - DEPTH).abs() < 1e-9));
        let (len, _, std) = scan_column(&files.signal, "Noise").unwrap();
        let n: usize = recs.iter().map(|r| r.width).sum();
        assert!(len.abs_diff(signal_length(n, entry.density)) <= 1);
        assert!((std * entry.nsigma - DEPTH).abs() < 0.03 * DEPTH);
        assert_eq!(built[0].samples, Some(len));
        assert_eq!(read_manifest(&dir.path().join(MANIFEST)).unwrap(), built);
    }

    #[test]
    fn noiseless_variant_is_events_only() {
        let e = &plan(2, Variant::Noiseless)[0];
        let cfg = e.config();
        assert!(!cfg.noise.enabled && !cfg.filter.rc_enabled && !cfg.filter.lpf_enabled);
        assert_eq!(cfg.columns, ColumnFlags::none());
    }
}
