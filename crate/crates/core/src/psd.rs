//! Welch power spectral density estimate.

use num_traits::Zero;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psd<T> {
    /// Hz, `k * fs / segment_len` for `k = 0..=segment_len/2`.
    pub frequency: Vec<T>,
    /// One-sided density, units^2 / Hz.
    pub power: Vec<T>,
}

impl<T: Real> Psd<T> {
    pub fn resolution(&self) -> f64 {
        if self.frequency.len() < 2 {
            0.0
        } else {
            self.frequency[1].widen() - self.frequency[0].widen()
        }
    }

    /// Integrated power, `sum(PSD) * df`.
    pub fn total_power(&self) -> f64 {
        self.power.iter().map(|p| p.widen()).sum::<f64>() * self.resolution()
    }

    /// Least-squares slope of `log10 P` against `log10 f` over `[f_lo, f_hi]`,
    /// skipping the DC bin.
    pub fn loglog_slope(&self, f_lo: f64, f_hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .frequency
            .iter()
            .zip(&self.power)
            .map(|(f, p)| (f.widen(), p.widen()))
            .filter(|(f, p)| *f > 0.0 && *f >= f_lo && *f <= f_hi && *p > 0.0)
            .map(|(f, p)| (f.log10(), p.log10()))
            .collect();
        linear_fit_slope(&pts)
    }

    /// Power summed over `bins` bins either side of the bin nearest `freq`.
    pub fn band_power(&self, freq: f64, bins: usize) -> f64 {
        let df = self.resolution();
        if df == 0.0 {
            return 0.0;
        }
        let centre = (freq / df).round() as usize;
        let lo = centre.saturating_sub(bins);
        let hi = (centre + bins).min(self.power.len() - 1);
        self.power[lo..=hi].iter().map(|p| p.widen()).sum::<f64>() * df
    }
}

pub fn linear_fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Averaged modified periodogram with a Hann window and per-segment mean
/// removal. `overlap` is in samples and must be smaller than `segment_len`.
pub fn welch_psd<T: Real>(signal: &[T], sampfreq: f64, segment_len: usize, overlap: usize) -> Result<Psd<T>> {
    if segment_len < 2 {
        return Err(Error::config("segment_len", "must be at least 2"));
    }
    if overlap >= segment_len {
        return Err(Error::config("overlap", "must be smaller than the segment length"));
    }
    if signal.len() < segment_len {
        return Err(Error::config(
            "segment_len",
            format!("signal of {} samples is shorter than one segment ({segment_len})", signal.len()),
        ));
    }
    if !(sampfreq > 0.0) {
        return Err(Error::config("sampfreq", "must be > 0"));
    }
    let window: Vec<f64> = (0..segment_len)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / segment_len as f64).cos())
        .collect();
    let w_energy: f64 = window.iter().map(|w| w * w).sum();
    let step = segment_len - overlap;
    let fft = FftPlanner::<T>::new().plan_fft_forward(segment_len);
    let bins = segment_len / 2 + 1;
    let mut acc = vec![0.0f64; bins];
    let mut buf = vec![Complex::<T>::zero(); segment_len];
    let mut segments = 0usize;
    let mut start = 0;
    while start + segment_len <= signal.len() {
        let seg = &signal[start..start + segment_len];
        let m = crate::scalar::mean(seg);
        for ((b, &x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new(T::cast((x.widen() - m) * w), T::zero());
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            let (re, im) = (c.re.widen(), c.im.widen());
            *a += re * re + im * im;
        }
        segments += 1;
        start += step;
    }
    let norm = 1.0 / (sampfreq * w_energy * segments as f64);
    let nyquist_bin = (segment_len % 2 == 0).then_some(segment_len / 2);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || Some(k) == nyquist_bin { 1.0 } else { 2.0 };
            T::cast(a * norm * one_sided)
        })
        .collect();
    let frequency = (0..bins)
        .map(|k| T::cast(k as f64 * sampfreq / segment_len as f64))
        .collect();
    Ok(Psd { frequency, power })
}
