//! Slow sinusoidal and abrupt stepwise baseline drifts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SinusoidalDrift {
    pub enabled: bool,
    /// Number of concatenated sinusoid segments.
    pub numconcs: usize,
    /// nA.
    pub maxamp: f64,
    /// Highest harmonic of the segment fundamental that may be drawn.
    pub max_harmonic: usize,
}

impl Default for SinusoidalDrift {
    fn default() -> Self {
        Self {
            enabled: false,
            numconcs: 4,
            maxamp: 0.5,
            max_harmonic: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbruptDrift {
    pub enabled: bool,
    pub nstepwins: usize,
    /// nA.
    pub driftmaxmag: f64,
    /// Maximum sublevels per window.
    pub maxnsteps: usize,
}

impl Default for AbruptDrift {
    fn default() -> Self {
        Self {
            enabled: false,
            nstepwins: 3,
            driftmaxmag: 0.5,
            maxnsteps: 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    pub sinusoidal: SinusoidalDrift,
    pub abrupt: AbruptDrift,
}

impl DriftConfig {
    pub fn any_enabled(&self) -> bool {
        self.sinusoidal.enabled || self.abrupt.enabled
    }

    /// Sum of the enabled drifters over `n` samples.
    pub fn generate<T: Real, R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); n];
        if self.sinusoidal.enabled {
            let s = &self.sinusoidal;
            let d: Vec<T> = sinusoidal_drift(n, s.numconcs, s.maxamp, s.max_harmonic, rng)?;
            out.iter_mut().zip(d).for_each(|(o, v)| *o = *o + v);
        }
        if self.abrupt.enabled {
            let a = &self.abrupt;
            let d: Vec<T> = abrupt_drift(n, a.nstepwins, a.driftmaxmag, a.maxnsteps, rng)?;
            out.iter_mut().zip(d).for_each(|(o, v)| *o = *o + v);
        }
        Ok(out)
    }
}

/// Contiguous near-equal partition of `0..n` into `parts` ranges.
pub fn split_even(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    (0..parts)
        .map(|i| (i * n / parts)..((i + 1) * n / parts))
        .collect()
}

/// One drift segment: `amplitude * sin(2 pi harmonic j / len)` for `j` in the segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinusoidSegment {
    pub amplitude: f64,
    pub harmonic: usize,
}

/// Render explicit segments over `n` samples, splitting `n` evenly. Each
/// segment restarts at phase 0.
pub fn render_sinusoids<T: Real>(n: usize, segments: &[SinusoidSegment]) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for (range, seg) in split_even(n, segments.len()).into_iter().zip(segments) {
        let len = range.len() as f64;
        for (j, o) in out[range].iter_mut().enumerate() {
            let phase = std::f64::consts::TAU * seg.harmonic as f64 * j as f64 / len;
            *o = T::cast(seg.amplitude * phase.sin());
        }
    }
    out
}

/// `numconcs` concatenated sinusoids with amplitudes uniform in `[0, maxamp]`
/// and harmonic numbers uniform in `1..=max_harmonic` of each segment's
/// one-period fundamental.
pub fn sinusoidal_drift<T: Real, R: Rng + ?Sized>(
    n: usize,
    numconcs: usize,
    maxamp: f64,
    max_harmonic: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if numconcs == 0 {
        return Err(Error::config("numconcs", "must be at least 1"));
    }
    if numconcs > n {
        return Err(Error::config(
            "numconcs",
            format!("{numconcs} segments do not fit in {n} samples"),
        ));
    }
    if !(maxamp >= 0.0 && maxamp.is_finite()) {
        return Err(Error::config("maxamp", "must be >= 0"));
    }
    if max_harmonic == 0 {
        return Err(Error::config("max_harmonic", "must be at least 1"));
    }
    let segments: Vec<SinusoidSegment> = (0..numconcs)
        .map(|_| SinusoidSegment {
            amplitude: if maxamp == 0.0 { 0.0 } else { rng.random_range(0.0..=maxamp) },
            harmonic: rng.random_range(1..=max_harmonic),
        })
        .collect();
    Ok(render_sinusoids(n, &segments))
}

/// Piecewise-constant drift: `nstepwins` even windows, each cut at random
/// points into `1..=maxnsteps` sublevels with values uniform in
/// `[-driftmaxmag, driftmaxmag]`.
pub fn abrupt_drift<T: Real, R: Rng + ?Sized>(
    n: usize,
    nstepwins: usize,
    driftmaxmag: f64,
    maxnsteps: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if nstepwins == 0 {
        return Err(Error::config("nstepwins", "must be at least 1"));
    }
    if maxnsteps == 0 {
        return Err(Error::config("maxnsteps", "must be at least 1"));
    }
    if !(driftmaxmag >= 0.0 && driftmaxmag.is_finite()) {
        return Err(Error::config("driftmaxmag", "must be >= 0"));
    }
    let windows = split_even(n, nstepwins);
    if let Some(short) = windows.iter().find(|w| w.len() < maxnsteps) {
        return Err(Error::config(
            "nstepwins",
            format!(
                "a window of {} samples cannot hold {maxnsteps} sublevels",
                short.len()
            ),
        ));
    }
    let mut out = vec![T::zero(); n];
    for w in windows {
        let steps = rng.random_range(1..=maxnsteps);
        let mut cuts: Vec<usize> = if steps > 1 {
            rand::seq::index::sample(rng, w.len() - 1, steps - 1)
                .into_iter()
                .map(|c| w.start + c + 1)
                .collect()
        } else {
            Vec::new()
        };
        cuts.sort_unstable();
        let mut edges = vec![w.start];
        edges.extend(cuts);
        edges.push(w.end);
        for pair in edges.windows(2) {
            let v = if driftmaxmag == 0.0 {
                0.0
            } else {
                rng.random_range(-driftmaxmag..=driftmaxmag)
            };
            out[pair[0]..pair[1]].fill(T::cast(v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn rng() -> crate::rng::SimRng {
        stream(3, Stream::Drift)
    }

    fn plateaus(x: &[f64]) -> usize {
        1 + x.windows(2).filter(|w| w[0] != w[1]).count()
    }

    #[test]
    fn zero_amplitude_sinusoid() {
        let d: Vec<f64> = sinusoidal_drift(1000, 3, 0.0, 3, &mut rng()).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_period_peak_equals_amplitude() {
        let d: Vec<f64> = render_sinusoids(4096, &[SinusoidSegment { amplitude: 0.7, harmonic: 1 }]);
        let peak = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.7).abs() < 1e-12);
        assert!((d[1024] - 0.7).abs() < 1e-12);
        assert!((d[3072] + 0.7).abs() < 1e-12);
    }

    #[test]
    fn four_segments_of_equal_length() {
        let segs = split_even(4096, 4);
        assert!(segs.iter().all(|r| r.len() == 1024));
        let d: Vec<f64> = sinusoidal_drift(4096, 4, 1.0, 3, &mut rng()).unwrap();
        // Each segment restarts at phase zero.
        for r in segs {
            assert_eq!(d[r.start], 0.0);
        }
    }

    #[test]
    fn too_many_segments() {
        assert!(sinusoidal_drift::<f64, _>(3, 4, 1.0, 3, &mut rng()).is_err());
    }

    #[test]
    fn zero_magnitude_steps() {
        let d: Vec<f64> = abrupt_drift(1000, 4, 0.0, 3, &mut rng()).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_windows_one_step_two_plateaus() {
        let d: Vec<f64> = abrupt_drift(1000, 2, 1.0, 1, &mut rng()).unwrap();
        assert_eq!(plateaus(&d), 2);
        assert!(d[..500].iter().all(|v| *v == d[0]));
        assert!(d[500..].iter().all(|v| *v == d[500]));
    }

    #[test]
    fn abrupt_bounded_and_piecewise() {
        for seed in 0..20 {
            let mut r = stream(seed, Stream::Drift);
            let d: Vec<f64> = abrupt_drift(5000, 5, 0.8, 4, &mut r).unwrap();
            assert!(d.iter().all(|v| v.abs() <= 0.8));
            assert!(plateaus(&d) <= 20);
        }
    }

    #[test]
    fn short_window_rejected() {
        assert!(abrupt_drift::<f64, _>(10, 5, 1.0, 3, &mut rng()).is_err());
    }

    #[test]
    fn sinusoid_bounded() {
        for seed in 0..20 {
            let mut r = stream(seed, Stream::Drift);
            let d: Vec<f64> = sinusoidal_drift(3000, 5, 0.4, 3, &mut r).unwrap();
            assert!(d.iter().all(|v| v.abs() <= 0.4 + 1e-12));
        }
    }
}
