//! First-order RC response and zero-phase Gaussian low-pass smoothing.

use num_traits::Zero;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub rc_enabled: bool,
    /// Ohms.
    pub resistance: f64,
    /// Farads.
    pub capacitance: f64,
    pub lpf_enabled: bool,
    /// -3 dB cutoff of the Gaussian low-pass, Hz.
    pub cutoff: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        // dt/RC = 0.25 at 250 kHz.
        Self {
            rc_enabled: true,
            resistance: 1.0e6,
            capacitance: 1.6e-11,
            lpf_enabled: true,
            cutoff: 10_000.0,
        }
    }
}

impl FilterConfig {
    pub fn disabled() -> Self {
        Self {
            rc_enabled: false,
            lpf_enabled: false,
            ..Self::default()
        }
    }

    /// Euler step ratio dt/(RC).
    pub fn rc_ratio(&self, sampfreq: f64) -> f64 {
        1.0 / (sampfreq * self.resistance * self.capacitance)
    }

    pub fn validate(&self, sampfreq: f64) -> Result<()> {
        if self.rc_enabled {
            if !(self.resistance > 0.0 && self.resistance.is_finite()) {
                return Err(Error::config("resistance", "must be > 0"));
            }
            if !(self.capacitance > 0.0 && self.capacitance.is_finite()) {
                return Err(Error::config("capacitance", "must be > 0"));
            }
            let k = self.rc_ratio(sampfreq);
            if k > 1.0 {
                return Err(Error::Stability { ratio: k });
            }
        }
        if self.lpf_enabled {
            check_cutoff(self.cutoff, sampfreq)?;
        }
        Ok(())
    }

    /// RC then (optionally) Gaussian, per the enabled flags.
    pub fn apply<T: Real>(&self, input: &[T], sampfreq: f64) -> Result<Vec<T>> {
        self.validate(sampfreq)?;
        let mut out = if self.rc_enabled {
            rc_filter(input, self.resistance, self.capacitance, sampfreq)?
        } else {
            input.to_vec()
        };
        if self.lpf_enabled {
            out = gaussian_lowpass(&out, self.cutoff, sampfreq)?;
        }
        Ok(out)
    }
}

fn check_cutoff(cutoff: f64, sampfreq: f64) -> Result<()> {
    if !(cutoff > 0.0 && cutoff < sampfreq / 2.0) {
        return Err(Error::config(
            "cutoff",
            format!("must lie in (0, {}) Hz (got {cutoff})", sampfreq / 2.0),
        ));
    }
    Ok(())
}

/// Forward-Euler RC response:
/// `out[i+1] = out[i] + k * (in[i+1] - out[i])` with `k = dt / RC`,
/// starting from `out[0] = in[0]`.
pub fn rc_filter<T: Real>(input: &[T], resistance: f64, capacitance: f64, sampfreq: f64) -> Result<Vec<T>> {
    if !(sampfreq > 0.0) {
        return Err(Error::config("sampfreq", "must be > 0"));
    }
    if !(resistance > 0.0 && capacitance > 0.0) {
        return Err(Error::config("resistance", "R and C must be > 0"));
    }
    rc_filter_ratio(input, 1.0 / (sampfreq * resistance * capacitance))
}

/// [`rc_filter`] parameterised directly by the step ratio `k = dt / RC`.
pub fn rc_filter_ratio<T: Real>(input: &[T], k: f64) -> Result<Vec<T>> {
    if !(k > 0.0) {
        return Err(Error::config("resistance", format!("dt/RC must be > 0 (got {k})")));
    }
    if k > 1.0 {
        return Err(Error::Stability { ratio: k });
    }
    let Some(&first) = input.first() else {
        return Ok(Vec::new());
    };
    let k = T::cast(k);
    let tiny = T::min_positive_value();
    let mut out = Vec::with_capacity(input.len());
    let mut y = first;
    out.push(y);
    for &x in &input[1..] {
        y = y + k * (x - y);
        // A decaying tail otherwise sticks at the smallest subnormal.
        if y.abs() < tiny {
            y = T::zero();
        }
        out.push(y);
    }
    Ok(out)
}

/// Kernels longer than this are applied by FFT block convolution.
const DIRECT_TAPS: usize = 255;

/// Symmetric Gaussian kernel truncated at 6 sigma and renormalised to unit sum.
/// The amplitude response is `exp(-f^2 / (2 sf^2))` with `sf = cutoff / sqrt(ln 2)`,
/// i.e. `1/sqrt(2)` (-3 dB) at `cutoff`.
pub fn gaussian_kernel(cutoff: f64, sampfreq: f64) -> Vec<f64> {
    let sigma_f = cutoff / std::f64::consts::LN_2.sqrt();
    let sigma_t = sampfreq / (2.0 * std::f64::consts::PI * sigma_f);
    let half = (6.0 * sigma_t).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = i as f64 - half as f64;
            (-0.5 * (x / sigma_t).powi(2)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`), which
/// keeps the total mass of a symmetric convolution unchanged.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Zero-phase Gaussian low-pass with -3 dB at `cutoff` and unit DC gain.
pub fn gaussian_lowpass<T: Real>(input: &[T], cutoff: f64, sampfreq: f64) -> Result<Vec<T>> {
    check_cutoff(cutoff, sampfreq)?;
    if input.is_empty() {
        return Ok(Vec::new());
    }
    let kernel = gaussian_kernel(cutoff, sampfreq);
    let half = kernel.len() / 2;
    let n = input.len();
    // Input extended by `half` reflected samples on each side.
    let padded: Vec<T> = (-(half as isize)..(n + half) as isize)
        .map(|i| input[reflect(i, n)])
        .collect();
    if kernel.len() <= DIRECT_TAPS {
        let taps: Vec<T> = kernel.iter().map(|&v| T::cast(v)).collect();
        Ok((0..n)
            .map(|i| {
                padded[i..i + taps.len()]
                    .iter()
                    .zip(&taps)
                    .fold(T::zero(), |acc, (&x, &w)| acc + x * w)
            })
            .collect())
    } else {
        Ok(fft_convolve_valid(&padded, &kernel, n))
    }
}

/// Overlap-save "valid" convolution: `out[i] = sum_j padded[i + j] * kernel[j]`
/// for `i < n`. The kernel is symmetric so correlation and convolution agree.
fn fft_convolve_valid<T: Real>(padded: &[T], kernel: &[f64], n: usize) -> Vec<T> {
    let m = kernel.len();
    let fft_len = (4 * m).next_power_of_two();
    let step = fft_len - m + 1;
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(fft_len);
    let inv = planner.plan_fft_inverse(fft_len);

    let mut kspec = vec![Complex::<T>::zero(); fft_len];
    for (j, &w) in kernel.iter().enumerate() {
        kspec[j] = Complex::new(T::cast(w), T::zero());
    }
    fwd.process(&mut kspec);
    let scale = T::cast(1.0 / fft_len as f64);

    let mut out = Vec::with_capacity(n);
    let mut buf = vec![Complex::<T>::zero(); fft_len];
    let mut pos = 0;
    while pos < n {
        for (i, b) in buf.iter_mut().enumerate() {
            let x = padded.get(pos + i).copied().unwrap_or_else(T::zero);
            *b = Complex::new(x, T::zero());
        }
        fwd.process(&mut buf);
        // Correlation with a real symmetric kernel == multiplication by conj.
        for (b, k) in buf.iter_mut().zip(&kspec) {
            *b = *b * k.conj();
        }
        inv.process(&mut buf);
        let take = step.min(n - pos);
        out.extend(buf[..take].iter().map(|c| c.re * scale));
        pos += take;
    }
    out
}
