//! A full generation run: events, filters, noise, drift and baseline shift.

use serde::{Deserialize, Serialize};

use crate::drift::DriftConfig;
use crate::error::{Error, Result};
use crate::events::{gen_events, EventConfig, EventLabel, EventRecord, PlacementConfig};
use crate::filters::FilterConfig;
use crate::noise::{compose_noise, NoiseConfig};
use crate::rng::{stream, Stream};
use crate::scalar::Real;

pub const DEFAULT_SAMPFREQ: f64 = 250_000.0;

/// Optional component columns written next to `Time` and `Current`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnFlags {
    pub clean: bool,
    pub filtered: bool,
    pub drift: bool,
    pub noise: bool,
}

impl Default for ColumnFlags {
    fn default() -> Self {
        Self {
            clean: true,
            filtered: true,
            drift: true,
            noise: true,
        }
    }
}

impl ColumnFlags {
    pub fn none() -> Self {
        Self {
            clean: false,
            filtered: false,
            drift: false,
            noise: false,
        }
    }
}

/// Every knob of a generation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Stem of the output file names.
    pub name: String,
    pub seed: u64,
    /// Hz.
    pub sampfreq: f64,
    /// Open-pore baseline in nA, added last.
    pub vshift: f64,
    pub events: EventConfig,
    pub placement: PlacementConfig,
    pub noise: NoiseConfig,
    pub filter: FilterConfig,
    pub drift: DriftConfig,
    pub columns: ColumnFlags,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            name: "signal".to_string(),
            seed: 0,
            sampfreq: DEFAULT_SAMPFREQ,
            vshift: 30.0,
            events: EventConfig::default(),
            placement: PlacementConfig::default(),
            noise: NoiseConfig::default(),
            filter: FilterConfig::default(),
            drift: DriftConfig::default(),
            columns: ColumnFlags::default(),
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || self.name.contains(['/', '\\'])
            || self.name == "."
            || self.name == ".."
        {
            return Err(Error::config("name", format!("'{}' is not a plain file stem", self.name)));
        }
        if !(self.sampfreq > 0.0 && self.sampfreq.is_finite()) {
            return Err(Error::config("sampfreq", format!("must be > 0 (got {})", self.sampfreq)));
        }
        if !self.vshift.is_finite() {
            return Err(Error::config("vshift", "must be finite"));
        }
        self.events.validate()?;
        self.placement.validate()?;
        self.noise.validate(self.sampfreq)?;
        self.filter.validate(self.sampfreq)?;
        Ok(())
    }

    /// Events only: no filters, noise or drift.
    pub fn events_only(mut self) -> Self {
        self.noise.enabled = false;
        self.filter = FilterConfig::disabled();
        self.drift = DriftConfig::default();
        self
    }
}

/// Time axis plus the final trace and its optional components.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalBundle<T> {
    pub sampfreq: f64,
    /// Seconds, `i / sampfreq`.
    pub time: Vec<f64>,
    /// Final current, nA.
    pub current: Vec<T>,
    /// Zero-baseline event trace.
    pub clean: Option<Vec<T>>,
    /// Clean trace after the RC and low-pass stages.
    pub filtered: Option<Vec<T>>,
    pub drift: Option<Vec<T>>,
    pub noise: Option<Vec<T>>,
}

impl<T: Real> SignalBundle<T> {
    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    /// Optional columns in write order, with their header names.
    pub fn components(&self) -> Vec<(&'static str, &[T])> {
        [
            ("Clean", &self.clean),
            ("Filtered", &self.filtered),
            ("Drift", &self.drift),
            ("Noise", &self.noise),
        ]
        .into_iter()
        .filter_map(|(name, c)| c.as_deref().map(|v| (name, v)))
        .collect()
    }

    pub fn check_lengths(&self) -> Result<()> {
        let n = self.current.len();
        if self.time.len() != n || self.components().iter().any(|(_, c)| c.len() != n) {
            return Err(Error::Internal("signal component lengths differ".into()));
        }
        Ok(())
    }
}

pub fn time_axis(n: usize, sampfreq: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 / sampfreq).collect()
}

/// Output of [`assemble`].
#[derive(Clone, Debug)]
pub struct Generated<T> {
    pub bundle: SignalBundle<T>,
    /// Absolute (baseline-shifted) ground truth.
    pub records: Vec<EventRecord>,
    pub labels: Vec<EventLabel>,
}

/// Run the generator: `final = filtered + noise + drift + vshift`.
pub fn assemble<T: Real>(cfg: &GenerationConfig) -> Result<Generated<T>> {
    cfg.validate()?;
    let fs = cfg.sampfreq;

    let mut ev_rng = stream(cfg.seed, Stream::Events);
    let events = gen_events::<T, _>(&cfg.events, &cfg.placement, &mut ev_rng)?;
    let n = events.clean.len();

    let filtered = cfg.filter.apply(&events.clean, fs)?;

    let amplitudes: Vec<f64> = events.shapes.iter().map(|s| s.mean_depth()).collect();
    let mut noise_rng = stream(cfg.seed, Stream::Noise);
    let noise = compose_noise(&events.clean, &cfg.noise, &amplitudes, fs, &mut noise_rng)?;

    let mut drift_rng = stream(cfg.seed, Stream::Drift);
    let drift = cfg.drift.generate::<T, _>(n, &mut drift_rng)?;

    let vshift = T::cast(cfg.vshift);
    let current: Vec<T> = filtered
        .iter()
        .zip(&noise)
        .zip(&drift)
        .map(|((&f, &w), &d)| f + w + d + vshift)
        .collect();

    let records = events
        .records
        .iter()
        .map(|r| r.shifted(cfg.vshift))
        .collect();

    let flags = &cfg.columns;
    let bundle = SignalBundle {
        sampfreq: fs,
        time: time_axis(n, fs),
        current,
        clean: flags.clean.then_some(events.clean),
        filtered: flags.filtered.then_some(filtered),
        drift: flags.drift.then_some(drift),
        noise: flags.noise.then_some(noise),
    };
    bundle.check_lengths()?;
    Ok(Generated {
        bundle,
        records,
        labels: events.labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::std_dev;

    fn single_event_cfg() -> GenerationConfig {
        let mut cfg = GenerationConfig {
            seed: 9,
            vshift: 30.0,
            ..Default::default()
        }
        .events_only();
        cfg.events.numpulses = 1;
        cfg.events.mincurr = 3.0;
        cfg.events.maxcurr = 3.0;
        cfg.events.minpwd = 200;
        cfg.events.maxpwd = 200;
        cfg
    }

    #[test]
    fn events_only_is_clean_plus_baseline() {
        let mut cfg = single_event_cfg();
        cfg.vshift = 0.0;
        let g = assemble::<f64>(&cfg).unwrap();
        assert_eq!(Some(&g.bundle.current), g.bundle.clean.as_ref());
    }

    #[test]
    fn baseline_and_floor_readout() {
        let mut cfg = single_event_cfg();
        cfg.filter.rc_enabled = true;
        let g = assemble::<f64>(&cfg).unwrap();
        let r = &g.records[0];
        let x = &g.bundle.current;
        assert!(x[..r.start_index].iter().all(|v| *v == 30.0));
        // RC at dt/RC=0.25 settles within a few dozen samples of a 200-point event.
        assert!((x[r.end_index - 1] - 27.0).abs() < 1e-6);
        assert_eq!(r.mean_current, 27.0);
    }

    #[test]
    fn composition_identity() {
        let mut cfg = GenerationConfig {
            seed: 4,
            ..Default::default()
        };
        cfg.drift.sinusoidal.enabled = true;
        cfg.drift.abrupt.enabled = true;
        let g = assemble::<f64>(&cfg).unwrap();
        let b = &g.bundle;
        let (f, w, d) = (
            b.filtered.as_ref().unwrap(),
            b.noise.as_ref().unwrap(),
            b.drift.as_ref().unwrap(),
        );
        for i in 0..b.len() {
            let back = b.current[i] - (w[i] + d[i] + cfg.vshift);
            assert!((back - f[i]).abs() <= 1e-12 * 64.0, "i={i}");
        }
        assert!(b.time.iter().enumerate().all(|(i, t)| *t == i as f64 / cfg.sampfreq));
    }

    #[test]
    fn reference_corpus_like_noise_level() {
        let mut cfg = GenerationConfig {
            seed: 1,
            ..Default::default()
        };
        cfg.events.mincurr = 3.0;
        cfg.events.maxcurr = 3.0;
        cfg.noise.nsigma = 5.0;
        cfg.placement.event_density_factor = 5.0;
        let g = assemble::<f64>(&cfg).unwrap();
        let s = std_dev(g.bundle.noise.as_ref().unwrap());
        assert!((s - 0.6).abs() < 0.006);
    }

    #[test]
    fn deterministic_and_precision_generic() {
        let cfg = GenerationConfig { seed: 77, ..Default::default() };
        let a = assemble::<f64>(&cfg).unwrap();
        let b = assemble::<f64>(&cfg).unwrap();
        assert_eq!(a.bundle, b.bundle);
        assert_eq!(a.records, b.records);
        let c = assemble::<f32>(&cfg).unwrap();
        assert_eq!(a.records, c.records);
        for (x, y) in a.bundle.current.iter().zip(&c.bundle.current) {
            assert!((x - *y as f64).abs() < 1e-3);
        }
    }

    #[test]
    fn toggling_noise_keeps_event_layout() {
        let cfg = GenerationConfig { seed: 12, ..Default::default() };
        let a = assemble::<f64>(&cfg).unwrap();
        let b = assemble::<f64>(&cfg.clone().events_only()).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn bad_name_rejected() {
        let cfg = GenerationConfig { name: "../x".into(), ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
