//! Classical threshold detector used as the harness baseline.
//!
//! The baseline is a moving median and the noise scale a moving MAD (scaled
//! to a Gaussian sigma), both evaluated on windows centred every
//! `window / 16` samples and held constant in between. A detection is a
//! contiguous run of samples below `baseline - k * sigma`. With `release_k`
//! set, each run is widened while samples stay below
//! `baseline - release_k * sigma`, and runs that then touch are merged.

use serde::{Deserialize, Serialize};

use super::DetectionRecord;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Consistency constant turning a MAD into a Gaussian standard deviation.
const MAD_TO_SIGMA: f64 = 1.482_602_218_505_602;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDetector {
    /// Baseline window, samples (>= 8).
    pub window: usize,
    /// Trigger level in robust sigmas below the baseline.
    pub k: f64,
    /// Optional boundary level in robust sigmas (hysteresis), below `k`.
    pub release_k: Option<f64>,
}

impl Default for ThresholdDetector {
    fn default() -> Self {
        Self {
            window: 65_536,
            k: 5.0,
            release_k: None,
        }
    }
}

struct LocalStats {
    stride: usize,
    baseline: Vec<f64>,
    sigma: Vec<f64>,
}

impl LocalStats {
    fn at(&self, i: usize) -> (f64, f64) {
        let b = i / self.stride;
        (self.baseline[b], self.sigma[b])
    }
}

fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (lo, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    if n % 2 == 1 {
        m
    } else {
        let l = lo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (l + m)
    }
}

fn local_stats(x: &[f64], window: usize) -> LocalStats {
    let n = x.len();
    let stride = (window / 16).max(1);
    let blocks = n.div_ceil(stride);
    let mut baseline = Vec::with_capacity(blocks);
    let mut sigma = Vec::with_capacity(blocks);
    let mut buf = Vec::with_capacity(window);
    for b in 0..blocks {
        let centre = b * stride + stride / 2;
        let start = centre.saturating_sub(window / 2).min(n - window);
        buf.clear();
        buf.extend_from_slice(&x[start..start + window]);
        let med = median_in_place(&mut buf);
        for v in buf.iter_mut() {
            *v = (*v - med).abs();
        }
        let mad = median_in_place(&mut buf);
        baseline.push(med);
        sigma.push(MAD_TO_SIGMA * mad);
    }
    LocalStats {
        stride,
        baseline,
        sigma,
    }
}

impl ThresholdDetector {
    pub fn new(window: usize, k: f64) -> Self {
        Self {
            window,
            k,
            release_k: None,
        }
    }

    pub fn detect<T: Real>(&self, signal: &[T]) -> Result<Vec<DetectionRecord>> {
        if self.window < 8 {
            return Err(Error::config("window", format!("must be at least 8 (got {})", self.window)));
        }
        if self.window >= signal.len() {
            return Err(Error::config(
                "window",
                format!("window {} is not shorter than the signal ({})", self.window, signal.len()),
            ));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::config("k", "must be >= 0"));
        }
        if let Some(r) = self.release_k {
            if !(r >= 0.0 && r <= self.k) {
                return Err(Error::config("release_k", "must lie in [0, k]"));
            }
        }
        let x: Vec<f64> = signal.iter().map(|v| v.widen()).collect();
        let stats = local_stats(&x, self.window);
        let below = |i: usize, level: f64| {
            let (b, s) = stats.at(i);
            x[i] < b - level * s
        };

        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut i = 0;
        while i < x.len() {
            if below(i, self.k) {
                let start = i;
                while i < x.len() && below(i, self.k) {
                    i += 1;
                }
                runs.push((start, i));
            } else {
                i += 1;
            }
        }

        if let Some(release) = self.release_k {
            for run in runs.iter_mut() {
                while run.0 > 0 && below(run.0 - 1, release) {
                    run.0 -= 1;
                }
                while run.1 < x.len() && below(run.1, release) {
                    run.1 += 1;
                }
            }
            let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
            for r in runs {
                match merged.last_mut() {
                    Some(last) if r.0 <= last.1 => last.1 = last.1.max(r.1),
                    _ => merged.push(r),
                }
            }
            runs = merged;
        }

        Ok(runs
            .into_iter()
            .map(|(s, e)| {
                let (base, _) = stats.at(s);
                let floor = x[s..e].iter().copied().fold(f64::INFINITY, f64::min);
                DetectionRecord::new(s, e, base - floor)
            })
            .collect())
    }
}

/// Convenience wrapper: `ThresholdDetector::new(window, k).detect(signal)`.
pub fn threshold_detector<T: Real>(signal: &[T], window: usize, k: f64) -> Result<Vec<DetectionRecord>> {
    ThresholdDetector::new(window, k).detect(signal)
}
