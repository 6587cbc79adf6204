//! Event shapes, their placement along a zero baseline, and ground-truth records.
//!
//! Events are rendered as negative deviations (`-depth`) from a zero baseline.
//! Records use half-open index ranges: an event occupies `[start, end)` and
//! `width == end - start`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of per-level columns carried by an [`EventRecord`].
pub const MAX_LEVELS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    /// Blockade depth in nA (rendered as `-depth`).
    pub depth: f64,
    /// Width in data points.
    pub width: usize,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub levels: Vec<LevelSpec>,
}

impl EventSpec {
    pub fn total_width(&self) -> usize {
        self.levels.iter().map(|l| l.width).sum()
    }

    pub fn is_multilevel(&self) -> bool {
        self.levels.len() > 1
    }

    /// Width-weighted mean depth.
    pub fn mean_depth(&self) -> f64 {
        let w = self.total_width() as f64;
        self.levels.iter().map(|l| l.depth * l.width as f64).sum::<f64>() / w
    }

    /// Concatenated level labels, e.g. `"TAGC"`. Empty when unlabeled.
    pub fn sequence(&self) -> String {
        self.levels
            .iter()
            .filter_map(|l| l.label.as_deref())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultilevelMode {
    #[default]
    Single,
    Multi,
    Mixed,
}

impl std::str::FromStr for MultilevelMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "single" => Ok(Self::Single),
            "multi" => Ok(Self::Multi),
            "mixed" => Ok(Self::Mixed),
            other => Err(format!("unknown multilevel mode '{other}'")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplicitLevels {
    pub currents: Vec<f64>,
    pub pulsewidths: Vec<usize>,
    /// Optional level names, same length as `currents` when non-empty.
    pub sequence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventConfig {
    pub numpulses: usize,
    pub mincurr: f64,
    pub maxcurr: f64,
    pub minpwd: usize,
    pub maxpwd: usize,
    pub multilevel: MultilevelMode,
    pub mixratio: f64,
    /// Fixed per-level currents and widths for multilevel events. When absent,
    /// multilevel events draw 2..=`max_levels` random levels within the global bounds.
    pub levels: Option<ExplicitLevels>,
    pub shuffle: bool,
    pub max_levels: usize,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            numpulses: 100,
            mincurr: 2.0,
            maxcurr: 5.0,
            minpwd: 10,
            maxpwd: 100,
            multilevel: MultilevelMode::Single,
            mixratio: 0.31,
            levels: None,
            shuffle: false,
            max_levels: MAX_LEVELS,
        }
    }
}

impl EventConfig {
    pub fn validate(&self) -> Result<()> {
        if self.numpulses == 0 {
            return Err(Error::config("numpulses", "must be at least 1"));
        }
        if !(self.mincurr.is_finite() && self.maxcurr.is_finite()) || self.mincurr < 0.0 {
            return Err(Error::config(
                "mincurr",
                format!("must be a finite depth >= 0 (got {})", self.mincurr),
            ));
        }
        if self.mincurr > self.maxcurr {
            return Err(Error::config(
                "mincurr",
                format!("mincurr ({}) exceeds maxcurr ({})", self.mincurr, self.maxcurr),
            ));
        }
        if self.minpwd == 0 {
            return Err(Error::config("minpwd", "must be at least 1"));
        }
        if self.minpwd > self.maxpwd {
            return Err(Error::config(
                "minpwd",
                format!("minpwd ({}) exceeds maxpwd ({})", self.minpwd, self.maxpwd),
            ));
        }
        if !(0.0..=1.0).contains(&self.mixratio) {
            return Err(Error::config(
                "mixratio",
                format!("must lie in [0, 1] (got {})", self.mixratio),
            ));
        }
        if !(2..=MAX_LEVELS).contains(&self.max_levels) {
            return Err(Error::config(
                "max_levels",
                format!("must lie in [2, {MAX_LEVELS}] (got {})", self.max_levels),
            ));
        }
        if let Some(lv) = &self.levels {
            if lv.currents.len() != lv.pulsewidths.len() {
                return Err(Error::config(
                    "currents",
                    format!(
                        "{} currents but {} pulsewidths",
                        lv.currents.len(),
                        lv.pulsewidths.len()
                    ),
                ));
            }
            if !lv.sequence.is_empty() && lv.sequence.len() != lv.currents.len() {
                return Err(Error::config(
                    "sequence",
                    format!(
                        "{} names for {} levels",
                        lv.sequence.len(),
                        lv.currents.len()
                    ),
                ));
            }
            if lv.currents.is_empty() || lv.currents.len() > MAX_LEVELS {
                return Err(Error::config(
                    "currents",
                    format!("between 1 and {MAX_LEVELS} levels required"),
                ));
            }
            if lv.currents.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::config("currents", "level depths must be finite and >= 0"));
            }
            if lv.pulsewidths.contains(&0) {
                return Err(Error::config("pulsewidths", "level widths must be >= 1"));
            }
        }
        Ok(())
    }

    /// Number of multilevel events: round-half-up of `mixratio * numpulses`
    /// in mixed mode.
    pub fn multilevel_count(&self) -> usize {
        match self.multilevel {
            MultilevelMode::Single => 0,
            MultilevelMode::Multi => self.numpulses,
            MultilevelMode::Mixed => {
                ((self.mixratio * self.numpulses as f64 + 0.5).floor() as usize).min(self.numpulses)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapDistribution {
    #[default]
    Exponential,
    Logistic,
    Uniform,
}

impl std::str::FromStr for GapDistribution {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exponential" | "expon" => Ok(Self::Exponential),
            "logistic" | "log" => Ok(Self::Logistic),
            "uniform" | "uni" => Ok(Self::Uniform),
            other => Err(format!("unknown distribution '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementConfig {
    pub dist: GapDistribution,
    /// Percent of samples occupied by events, in (0, 100].
    pub event_density_factor: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self {
            dist: GapDistribution::Exponential,
            event_density_factor: 5.0,
        }
    }
}

impl PlacementConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.event_density_factor;
        if !(d.is_finite() && d > 0.0 && d <= 100.0) {
            return Err(Error::config(
                "event_density_factor",
                format!("must lie in (0, 100] (got {d})"),
            ));
        }
        Ok(())
    }
}

/// Ground truth for one event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub start_index: usize,
    /// Exclusive.
    pub end_index: usize,
    pub width: usize,
    /// Width-weighted mean current in nA (absolute once shifted by the baseline).
    pub mean_current: f64,
    pub level_currents: [f64; MAX_LEVELS],
    pub level_widths: [usize; MAX_LEVELS],
}

impl EventRecord {
    fn from_spec(spec: &EventSpec, start: usize) -> Self {
        let width = spec.total_width();
        let mut level_currents = [0.0; MAX_LEVELS];
        let mut level_widths = [0; MAX_LEVELS];
        for (k, lv) in spec.levels.iter().enumerate() {
            level_currents[k] = -lv.depth;
            level_widths[k] = lv.width;
        }
        // Unused level slots repeat the last level's current with zero width.
        let last = -spec.levels.last().map_or(0.0, |l| l.depth);
        for c in level_currents.iter_mut().skip(spec.levels.len()) {
            *c = last;
        }
        Self {
            start_index: start,
            end_index: start + width,
            width,
            mean_current: -spec.mean_depth(),
            level_currents,
            level_widths,
        }
    }

    /// The same record with every current offset by `baseline`.
    pub fn shifted(&self, baseline: f64) -> Self {
        let mut out = self.clone();
        out.mean_current += baseline;
        for c in &mut out.level_currents {
            *c += baseline;
        }
        out
    }

    /// Blockade depth relative to `baseline` (positive for a current dip).
    pub fn amplitude(&self, baseline: f64) -> f64 {
        baseline - self.mean_current
    }

    pub fn level_count(&self) -> usize {
        self.level_widths.iter().filter(|w| **w > 0).count()
    }
}

/// Per-event label returned alongside the clean signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventLabel {
    pub multilevel: bool,
    pub sequence: String,
}

fn uniform_f64<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Draw `cfg.numpulses` event shapes.
pub fn sample_event_shapes<R: Rng + ?Sized>(cfg: &EventConfig, rng: &mut R) -> Result<Vec<EventSpec>> {
    cfg.validate()?;
    let n = cfg.numpulses;
    let n_multi = cfg.multilevel_count();

    let mut is_multi = vec![false; n];
    if n_multi == n {
        is_multi.fill(true);
    } else if n_multi > 0 {
        for i in rand::seq::index::sample(rng, n, n_multi) {
            is_multi[i] = true;
        }
    }

    let single = |rng: &mut R| LevelSpec {
        depth: uniform_f64(rng, cfg.mincurr, cfg.maxcurr),
        width: rng.random_range(cfg.minpwd..=cfg.maxpwd),
        label: None,
    };

    let mut events = Vec::with_capacity(n);
    for multi in is_multi {
        let levels = if !multi {
            vec![single(rng)]
        } else if let Some(explicit) = &cfg.levels {
            let mut levels: Vec<LevelSpec> = explicit
                .currents
                .iter()
                .zip(&explicit.pulsewidths)
                .enumerate()
                .map(|(k, (&depth, &width))| LevelSpec {
                    depth,
                    width,
                    label: explicit.sequence.get(k).cloned(),
                })
                .collect();
            if cfg.shuffle {
                levels.shuffle(rng);
            }
            levels
        } else {
            let count = rng.random_range(2..=cfg.max_levels);
            (0..count).map(|_| single(rng)).collect()
        };
        events.push(EventSpec { levels });
    }
    Ok(events)
}

/// Total trace length for `event_points` event samples at density `d` percent.
pub fn signal_length(event_points: usize, density: f64) -> usize {
    (event_points as f64 * 100.0 / density).round() as usize
}

fn raw_gaps<R: Rng + ?Sized>(dist: GapDistribution, count: usize, rng: &mut R) -> Vec<f64> {
    match dist {
        GapDistribution::Exponential => (0..count).map(|_| Exp1.sample(rng)).collect(),
        GapDistribution::Uniform => (0..count).map(|_| rng.random::<f64>()).collect(),
        GapDistribution::Logistic => {
            // Logistic with location 1 and scale 1/4 (relative to the mean gap),
            // truncated at zero by inverse-CDF sampling above F(0).
            const LOC: f64 = 1.0;
            const SCALE: f64 = 0.25;
            let f0 = 1.0 / (1.0 + (LOC / SCALE).exp());
            (0..count)
                .map(|_| {
                    let u = f0 + (1.0 - f0) * rng.random::<f64>();
                    let u = u.clamp(f0, 1.0 - f64::EPSILON);
                    (LOC + SCALE * (u / (1.0 - u)).ln()).max(0.0)
                })
                .collect()
        }
    }
}

/// Lay events out along a zero baseline.
///
/// `numpulses + 1` raw gaps are drawn from the placement distribution and
/// rescaled to fill exactly `l - n` free samples, with one sample reserved
/// between consecutive events. Rounding uses cumulative boundaries so the gaps
/// sum exactly; the residue lands on the final gap.
pub fn place_events<T: Real, R: Rng + ?Sized>(
    events: &[EventSpec],
    placement: &PlacementConfig,
    rng: &mut R,
) -> Result<(Vec<T>, Vec<EventRecord>)> {
    placement.validate()?;
    if events.is_empty() {
        return Err(Error::config("numpulses", "must be at least 1"));
    }
    let n: usize = events.iter().map(EventSpec::total_width).sum();
    let length = signal_length(n, placement.event_density_factor);
    let reserved = events.len() - 1;
    if length < n + reserved {
        return Err(Error::config(
            "event_density_factor",
            format!(
                "{} events of {n} total points need at least {} samples with separating gaps, \
                 but density {} gives {length}",
                events.len(),
                n + reserved,
                placement.event_density_factor
            ),
        ));
    }
    let free = (length - n - reserved) as f64;

    let raw = raw_gaps(placement.dist, events.len() + 1, rng);
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = if total > 0.0 {
        raw
    } else {
        vec![1.0; events.len() + 1]
    };
    let total: f64 = weights.iter().sum();

    let mut gaps = Vec::with_capacity(weights.len());
    let mut cumulative = 0.0;
    let mut prev_boundary = 0usize;
    for (i, w) in weights.iter().enumerate() {
        let boundary = if i + 1 == weights.len() {
            free as usize
        } else {
            cumulative += w;
            ((cumulative / total * free).round() as usize).min(free as usize)
        };
        gaps.push(boundary - prev_boundary);
        prev_boundary = boundary;
    }

    let mut clean = vec![T::zero(); length];
    let mut records = Vec::with_capacity(events.len());
    let mut cursor = gaps[0];
    for (i, ev) in events.iter().enumerate() {
        if i > 0 {
            cursor += gaps[i] + 1;
        }
        let mut pos = cursor;
        for lv in &ev.levels {
            let v = T::cast(-lv.depth);
            clean[pos..pos + lv.width].fill(v);
            pos += lv.width;
        }
        records.push(EventRecord::from_spec(ev, cursor));
        cursor = pos;
    }
    debug_assert_eq!(cursor + gaps[events.len()], length);
    Ok((clean, records))
}

/// Clean zero-baseline signal, ground-truth records (baseline 0) and labels.
pub struct CleanSignal<T> {
    pub clean: Vec<T>,
    pub records: Vec<EventRecord>,
    pub labels: Vec<EventLabel>,
    pub shapes: Vec<EventSpec>,
}

pub fn gen_events<T: Real, R: Rng + ?Sized>(
    events: &EventConfig,
    placement: &PlacementConfig,
    rng: &mut R,
) -> Result<CleanSignal<T>> {
    let shapes = sample_event_shapes(events, rng)?;
    let (clean, records) = place_events(&shapes, placement, rng)?;
    let labels = shapes
        .iter()
        .map(|s| EventLabel {
            multilevel: s.is_multilevel(),
            sequence: s.sequence(),
        })
        .collect();
    Ok(CleanSignal {
        clean,
        records,
        labels,
        shapes,
    })
}
