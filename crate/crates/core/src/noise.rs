//! White, powerline (AC) and power-law noise, and their SNR-calibrated mix.

use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{std_dev, Real};

/// Mains frequency of the AC component, Hz.
pub const MAINS_HZ: f64 = 50.0;
pub const MAX_HARMONICS: usize = 3;

/// Which event amplitude the noise level is referenced to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingStrategy {
    /// Every event exceeds `nsigma * std(noise)`.
    #[default]
    MinAmplitude,
    /// No event exceeds `nsigma * std(noise)`.
    MaxAmplitude,
    MeanAmplitude,
}

impl std::str::FromStr for ScalingStrategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "min" | "min_amplitude" => Ok(Self::MinAmplitude),
            "max" | "max_amplitude" => Ok(Self::MaxAmplitude),
            "mean" | "mean_amplitude" => Ok(Self::MeanAmplitude),
            other => Err(format!("unknown scaling strategy '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Reference event amplitude over noise standard deviation.
    pub nsigma: f64,
    pub strategy: ScalingStrategy,
    pub white: bool,
    pub ac: bool,
    pub colored: bool,
    /// Power-law exponents; one unit-variance trace is generated per entry.
    pub beta: Vec<f64>,
    pub n_harmonics: usize,
    /// AC fundamental amplitude before the global rescale. Defaults to a
    /// fifth of the clean-signal standard deviation.
    pub ac_amp: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            nsigma: 5.0,
            strategy: ScalingStrategy::MinAmplitude,
            white: true,
            ac: true,
            colored: true,
            beta: vec![1.2],
            n_harmonics: 3,
            ac_amp: None,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self, sampfreq: f64) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        if !(self.nsigma > 0.0 && self.nsigma.is_finite()) {
            return Err(Error::config("nsigma", format!("must be > 0 (got {})", self.nsigma)));
        }
        if !(self.white || self.ac || self.colored) {
            return Err(Error::config(
                "nsigma",
                "noise is enabled but the white, ac and colored components are all off",
            ));
        }
        if self.colored {
            if self.beta.is_empty() {
                return Err(Error::config("beta", "at least one exponent is required"));
            }
            if self.beta.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                return Err(Error::config("beta", "exponents must be finite and >= 0"));
            }
        }
        if self.ac {
            if !(1..=MAX_HARMONICS).contains(&self.n_harmonics) {
                return Err(Error::config(
                    "n_harmonics",
                    format!("must lie in [1, {MAX_HARMONICS}] (got {})", self.n_harmonics),
                ));
            }
            check_nyquist(sampfreq, self.n_harmonics)?;
            if let Some(a) = self.ac_amp {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::config("ac_amp", "must be >= 0"));
                }
            }
        }
        Ok(())
    }
}

fn check_nyquist(sampfreq: f64, n_harmonics: usize) -> Result<()> {
    let top = MAINS_HZ * n_harmonics as f64;
    if sampfreq <= 2.0 * top {
        return Err(Error::config(
            "sampfreq",
            format!("{sampfreq} Hz cannot represent the {top} Hz AC harmonic"),
        ));
    }
    Ok(())
}

/// I.i.d. uniform samples on `[-a, a]`, `a = sqrt(3) * target_std`, so the
/// population standard deviation is `target_std`.
pub fn white_noise<T: Real, R: Rng + ?Sized>(n: usize, target_std: f64, rng: &mut R) -> Vec<T> {
    let a = 3f64.sqrt() * target_std;
    if a == 0.0 {
        return vec![T::zero(); n];
    }
    (0..n).map(|_| T::cast(rng.random_range(-a..a))).collect()
}

/// Sum of the first `n_harmonics` multiples of 50 Hz with amplitudes
/// `base_amp / k^2` and independent uniform phases.
pub fn ac_noise<T: Real, R: Rng + ?Sized>(
    n: usize,
    sampfreq: f64,
    base_amp: f64,
    n_harmonics: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if !(1..=MAX_HARMONICS).contains(&n_harmonics) {
        return Err(Error::config(
            "n_harmonics",
            format!("must lie in [1, {MAX_HARMONICS}] (got {n_harmonics})"),
        ));
    }
    check_nyquist(sampfreq, n_harmonics)?;
    let phases: Vec<f64> = (0..n_harmonics)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    if base_amp == 0.0 {
        return Ok(vec![T::zero(); n]);
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / sampfreq;
            let v: f64 = phases
                .iter()
                .enumerate()
                .map(|(j, phi)| {
                    let k = (j + 1) as f64;
                    base_amp / (k * k) * (std::f64::consts::TAU * MAINS_HZ * k * t + phi).sin()
                })
                .sum();
            T::cast(v)
        })
        .collect())
}

/// Power-law noise with PSD proportional to `f^-beta` (Timmer & Koenig).
///
/// For each positive Fourier frequency two independent standard normals are
/// drawn for the real and imaginary parts and scaled by `f^(-beta/2)`; the DC
/// term is zero and, for even `n`, the Nyquist term is real. The inverse
/// transform is normalised to unit sample standard deviation.
pub fn colored_noise<T: Real, R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::config("n", "colored noise needs at least 2 samples"));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::config("beta", format!("must be >= 0 (got {beta})")));
    }
    let half = n / 2;
    let mut spec = vec![Complex::<T>::zero(); n];
    for k in 1..=half {
        let f = k as f64 / n as f64;
        let scale = f.powf(-beta / 2.0);
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let im = if n % 2 == 0 && k == half { 0.0 } else { im };
        let c = Complex::new(T::cast(re * scale), T::cast(im * scale));
        spec[k] = c;
        if k != n - k {
            spec[n - k] = c.conj();
        }
    }
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_inverse(n).process(&mut spec);
    let out: Vec<T> = spec.into_iter().map(|c| c.re).collect();
    let sd = std_dev(&out);
    if sd == 0.0 {
        return Ok(out);
    }
    let inv = T::cast(1.0 / sd);
    Ok(out.into_iter().map(|v| v * inv).collect())
}

/// Reference amplitude for the chosen strategy.
pub fn reference_amplitude(strategy: ScalingStrategy, amplitudes: &[f64]) -> Option<f64> {
    if amplitudes.is_empty() {
        return None;
    }
    let abs = amplitudes.iter().map(|a| a.abs());
    Some(match strategy {
        ScalingStrategy::MinAmplitude => abs.fold(f64::INFINITY, f64::min),
        ScalingStrategy::MaxAmplitude => abs.fold(0.0, f64::max),
        ScalingStrategy::MeanAmplitude => abs.sum::<f64>() / amplitudes.len() as f64,
    })
}

/// Mix the enabled components and rescale so `std(noise) = A_ref / nsigma`.
///
/// Before the rescale, white noise sits at `std(clean) / 5`, each colored
/// trace at unit standard deviation and the AC fundamental at `ac_amp`
/// (default `std(clean) / 5`); those levels only set the mix proportions.
pub fn compose_noise<T: Real, R: Rng + ?Sized>(
    clean: &[T],
    cfg: &NoiseConfig,
    event_amplitudes: &[f64],
    sampfreq: f64,
    rng: &mut R,
) -> Result<Vec<T>> {
    cfg.validate(sampfreq)?;
    let n = clean.len();
    if !cfg.enabled {
        return Ok(vec![T::zero(); n]);
    }
    let a_ref = reference_amplitude(cfg.strategy, event_amplitudes)
        .ok_or_else(|| Error::config("nsigma", "no event amplitudes to reference"))?;

    let sigma_c = std_dev(clean);
    let pre = if sigma_c > 0.0 { sigma_c / 5.0 } else { 1.0 };
    let mut total = vec![T::zero(); n];
    let mut add = |xs: Vec<T>| {
        for (t, x) in total.iter_mut().zip(xs) {
            *t = *t + x;
        }
    };
    if cfg.white {
        add(white_noise(n, pre, rng));
    }
    if cfg.ac {
        add(ac_noise(n, sampfreq, cfg.ac_amp.unwrap_or(pre), cfg.n_harmonics, rng)?);
    }
    if cfg.colored && n >= 2 {
        for &b in &cfg.beta {
            add(colored_noise(n, b, rng)?);
        }
    }
    let sd = std_dev(&total);
    if sd == 0.0 {
        if a_ref == 0.0 {
            return Ok(total);
        }
        return Err(Error::config(
            "nsigma",
            "enabled noise components produced a zero-variance trace",
        ));
    }
    let gain = T::cast(a_ref / cfg.nsigma / sd);
    Ok(total.into_iter().map(|v| v * gain).collect())
}
