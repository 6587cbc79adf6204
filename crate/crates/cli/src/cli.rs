//! Argument definitions and the command implementations behind them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use poresim_core::bench::{
    read_bins_csv, read_detections_csv, write_detections_csv, BenchmarkReport, ColumnMap, DetectionRecord, FileScore,
    ScoreInput, ThresholdDetector, DEFAULT_BIN, DEFAULT_TOLERANCE,
};
use poresim_core::corpus::{self, CorpusEntry, Variant};
use poresim_core::dataset::{generate_ml_dataset, Bounds, DatasetSpec};
use poresim_core::events::{GapDistribution, MultilevelMode};
use poresim_core::io::{read_event_details_csv, read_signal_csv, write_run};
use poresim_core::noise::ScalingStrategy;
use poresim_core::pipeline::{assemble, ColumnFlags, GenerationConfig};
use poresim_core::{Error, Real};

use crate::error::CliError;

pub const OUTPUT_ENV: &str = "PORESIM_OUTPUT_DIR";

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "poresim", version, about = "Synthetic nanopore translocation signals and detector benchmarking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one signal with its event table and parameter log.
    Generate(GenerateArgs),
    /// Generate a labelled segment dataset for classifier training.
    Dataset(DatasetArgs),
    /// Build the 105-file benchmark corpus.
    Corpus(CorpusArgs),
    /// Score detector outputs against a corpus.
    Benchmark(BenchmarkArgs),
    /// Run the threshold detector on a signal CSV.
    Detect(DetectArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub seed: u64,
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUTPUT_ENV, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub name: Option<String>,
    /// Write single-precision samples.
    #[arg(long)]
    pub f32: bool,

    #[arg(long)]
    pub numpulses: Option<usize>,
    /// Smallest event depth, nA.
    #[arg(long)]
    pub mincurr: Option<f64>,
    /// Largest event depth, nA.
    #[arg(long)]
    pub maxcurr: Option<f64>,
    /// Shortest event, points.
    #[arg(long)]
    pub minpwd: Option<usize>,
    /// Longest event, points.
    #[arg(long)]
    pub maxpwd: Option<usize>,
    /// single, multi or mixed.
    #[arg(long)]
    pub multilevel: Option<MultilevelMode>,
    #[arg(long)]
    pub mixratio: Option<f64>,
    #[arg(long)]
    pub max_levels: Option<usize>,
    #[arg(long)]
    pub shuffle: bool,
    /// Gap distribution: exponential, logistic or uniform.
    #[arg(long)]
    pub dist: Option<GapDistribution>,
    /// Percent of samples covered by events.
    #[arg(long)]
    pub density: Option<f64>,

    #[arg(long)]
    pub no_noise: bool,
    #[arg(long)]
    pub nsigma: Option<f64>,
    /// min, max or mean.
    #[arg(long)]
    pub strategy: Option<ScalingStrategy>,
    #[arg(long)]
    pub no_white: bool,
    #[arg(long)]
    pub no_ac: bool,
    #[arg(long)]
    pub no_colored: bool,
    /// Colored-noise exponents, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    #[arg(long)]
    pub harmonics: Option<usize>,
    #[arg(long)]
    pub ac_amp: Option<f64>,

    #[arg(long)]
    pub no_rc: bool,
    /// Ohms.
    #[arg(long)]
    pub resistance: Option<f64>,
    /// Farads.
    #[arg(long)]
    pub capacitance: Option<f64>,
    #[arg(long)]
    pub no_lpf: bool,
    /// Low-pass -3 dB frequency, Hz.
    #[arg(long)]
    pub cutoff: Option<f64>,

    #[arg(long)]
    pub sin_drift: bool,
    #[arg(long)]
    pub numconcs: Option<usize>,
    #[arg(long)]
    pub maxamp: Option<f64>,
    #[arg(long)]
    pub max_harmonic: Option<usize>,
    #[arg(long)]
    pub step_drift: bool,
    #[arg(long)]
    pub nstepwins: Option<usize>,
    #[arg(long)]
    pub driftmaxmag: Option<f64>,
    #[arg(long)]
    pub maxnsteps: Option<usize>,

    /// Open-pore baseline, nA.
    #[arg(long)]
    pub vshift: Option<f64>,
    /// Hz.
    #[arg(long)]
    pub sampfreq: Option<f64>,
    /// Optional columns to write: any of clean,filtered,drift,noise, or none.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
}

fn set<T>(slot: &mut T, v: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = v {
        *slot = v.clone();
    }
}

pub fn read_config_json(path: &Path) -> Result<GenerationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::flag("--config", format!("{}: {e}", path.display())))
}

impl GenerateArgs {
    /// Defaults (or the `--config` file) with the flags applied on top.
    pub fn to_config(&self) -> Result<GenerationConfig> {
        let mut c = match &self.config {
            Some(p) => read_config_json(p)?,
            None => GenerationConfig::default(),
        };
        c.seed = self.seed;
        set(&mut c.name, &self.name);
        set(&mut c.sampfreq, &self.sampfreq);
        set(&mut c.vshift, &self.vshift);

        let e = &mut c.events;
        set(&mut e.numpulses, &self.numpulses);
        set(&mut e.mincurr, &self.mincurr);
        set(&mut e.maxcurr, &self.maxcurr);
        set(&mut e.minpwd, &self.minpwd);
        set(&mut e.maxpwd, &self.maxpwd);
        set(&mut e.multilevel, &self.multilevel);
        set(&mut e.mixratio, &self.mixratio);
        set(&mut e.max_levels, &self.max_levels);
        e.shuffle |= self.shuffle;
        set(&mut c.placement.dist, &self.dist);
        set(&mut c.placement.event_density_factor, &self.density);

        let n = &mut c.noise;
        n.enabled &= !self.no_noise;
        set(&mut n.nsigma, &self.nsigma);
        set(&mut n.strategy, &self.strategy);
        n.white &= !self.no_white;
        n.ac &= !self.no_ac;
        n.colored &= !self.no_colored;
        set(&mut n.beta, &self.beta);
        set(&mut n.n_harmonics, &self.harmonics);
        if self.ac_amp.is_some() {
            n.ac_amp = self.ac_amp;
        }

        let f = &mut c.filter;
        f.rc_enabled &= !self.no_rc;
        set(&mut f.resistance, &self.resistance);
        set(&mut f.capacitance, &self.capacitance);
        f.lpf_enabled &= !self.no_lpf;
        set(&mut f.cutoff, &self.cutoff);

        let s = &mut c.drift.sinusoidal;
        s.enabled |= self.sin_drift;
        set(&mut s.numconcs, &self.numconcs);
        set(&mut s.maxamp, &self.maxamp);
        set(&mut s.max_harmonic, &self.max_harmonic);
        let a = &mut c.drift.abrupt;
        a.enabled |= self.step_drift;
        set(&mut a.nstepwins, &self.nstepwins);
        set(&mut a.driftmaxmag, &self.driftmaxmag);
        set(&mut a.maxnsteps, &self.maxnsteps);

        if let Some(cols) = &self.columns {
            c.columns = parse_columns(cols)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_columns(cols: &[String]) -> Result<ColumnFlags> {
    let mut flags = ColumnFlags::none();
    for col in cols.iter().map(|s| s.trim().to_ascii_lowercase()) {
        match col.as_str() {
            "clean" => flags.clean = true,
            "filtered" => flags.filtered = true,
            "drift" => flags.drift = true,
            "noise" => flags.noise = true,
            "none" | "" => {}
            other => return Err(CliError::flag("--columns", format!("unknown column '{other}'"))),
        }
    }
    Ok(flags)
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub count: usize,
    #[arg(long, env = OUTPUT_ENV, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = poresim_core::dataset::SEGMENT_LEN)]
    pub segment_len: usize,
    /// Event depth range, nA, as lo:hi.
    #[arg(long)]
    pub amplitude: Option<String>,
    /// Event width range, points, as lo:hi.
    #[arg(long)]
    pub width: Option<String>,
    /// Density range, percent, as lo:hi.
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long)]
    pub nsigma: Option<String>,
    #[arg(long)]
    pub vshift: Option<String>,
}

fn parse_bounds<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Bounds<T>> {
    let bad = || CliError::flag(flag, format!("expected lo:hi, got '{s}'"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok(Bounds::new(
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

impl DatasetArgs {
    pub fn to_spec(&self) -> Result<DatasetSpec> {
        let mut spec = DatasetSpec {
            count: self.count,
            seed: self.seed,
            segment_len: self.segment_len,
            ..DatasetSpec::default()
        };
        if let Some(s) = &self.amplitude {
            spec.amplitude = parse_bounds("--amplitude", s)?;
        }
        if let Some(s) = &self.width {
            spec.width = parse_bounds("--width", s)?;
        }
        if let Some(s) = &self.density {
            spec.density = parse_bounds("--density", s)?;
        }
        if let Some(s) = &self.nsigma {
            spec.nsigma = parse_bounds("--nsigma", s)?;
        }
        if let Some(s) = &self.vshift {
            spec.vshift = parse_bounds("--vshift", s)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, env = OUTPUT_ENV, default_value = ".")]
    pub out: PathBuf,
    /// Write events on a flat baseline, without filters or noise.
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    /// Baseline window, samples.
    #[arg(long, default_value_t = ThresholdDetector::default().window)]
    pub window: usize,
    /// Trigger level in robust sigmas.
    #[arg(long, default_value_t = ThresholdDetector::default().k)]
    pub k: f64,
    /// Boundary level in robust sigmas, below k.
    #[arg(long)]
    pub release_k: Option<f64>,
}

impl DetectorArgs {
    pub fn detector(&self) -> ThresholdDetector {
        ThresholdDetector {
            window: self.window,
            k: self.k,
            release_k: self.release_k,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub signal: PathBuf,
    /// Output CSV; defaults to `<signal stem>-detections.csv` beside the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "Current")]
    pub column: String,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Corpus directory holding `manifest.csv`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Detector output as NAME=DIR; DIR holds one event table per corpus file.
    #[arg(long = "program")]
    pub programs: Vec<String>,
    /// Predicted bins as NAME=DIR; DIR holds one `bin_index,probability` table per file.
    #[arg(long = "bins")]
    pub bins: Vec<String>,
    /// File name pattern inside each program directory.
    #[arg(long, default_value = "{file}.csv")]
    pub pattern: String,
    /// Column mapping for program tables, e.g. `start=Start,end=End,amplitude=dI,kind=depth`.
    #[arg(long)]
    pub columns: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub bin_threshold: f64,
    /// Score the ground truth against itself as program `truth`.
    #[arg(long)]
    pub self_truth: bool,
    /// Run the built-in threshold detector as program `threshold`.
    #[arg(long)]
    pub threshold_detector: bool,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// CSV with columns program,file,seconds.
    #[arg(long)]
    pub runtimes: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: usize,
    #[arg(long, default_value_t = DEFAULT_BIN)]
    pub bin_size: usize,
    /// Directory for report.csv and report.json.
    #[arg(long, env = OUTPUT_ENV, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, env = OUTPUT_ENV, default_value = ".")]
    pub out: PathBuf,
}

/// Run a parsed command; returns the text to print on success.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Dataset(a) => dataset(&a),
        Command::Corpus(a) => build_corpus(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::Detect(a) => detect(&a),
        Command::Serve(a) => serve(&a),
    }
}

fn generate_as<T: Real>(cfg: &GenerationConfig, out: &Path) -> Result<String> {
    let g = assemble::<T>(cfg)?;
    let files = write_run(out, cfg, &g)?;
    Ok(format!(
        "{} samples, {} events\n{}\n{}\n{}\n",
        g.bundle.len(),
        g.records.len(),
        files.signal.display(),
        files.details.display(),
        files.params.display()
    ))
}

pub fn generate(a: &GenerateArgs) -> Result<String> {
    let cfg = a.to_config()?;
    if a.f32 {
        generate_as::<f32>(&cfg, &a.out)
    } else {
        generate_as::<f64>(&cfg, &a.out)
    }
}

pub fn dataset(a: &DatasetArgs) -> Result<String> {
    let spec = a.to_spec()?;
    let m = generate_ml_dataset(&a.out, &spec)?;
    Ok(format!(
        "{} segments of {} points ({} with events) in {}\n",
        m.rows.len(),
        m.segment_len,
        m.positives(),
        a.out.display()
    ))
}

pub fn build_corpus(a: &CorpusArgs) -> Result<String> {
    let variant = if a.noiseless { Variant::Noiseless } else { Variant::Standard };
    let started = Instant::now();
    let entries = corpus::build(&a.out, &corpus::plan(a.seed, variant))?;
    let samples: usize = entries.iter().filter_map(|e| e.samples).sum();
    Ok(format!(
        "{} files, {samples} samples in {} ({:.1} s)\n",
        entries.len(),
        a.out.display(),
        started.elapsed().as_secs_f64()
    ))
}

pub fn detect(a: &DetectArgs) -> Result<String> {
    let sig = read_signal_csv(&a.signal)?;
    let column = column_of(&sig, &a.column).ok_or_else(|| CliError::flag("--column", format!("no column '{}'", a.column)))?;
    let started = Instant::now();
    let dets = a.detector.detector().detect(column)?;
    let secs = started.elapsed().as_secs_f64();
    let out = a.out.clone().unwrap_or_else(|| {
        let stem = a.signal.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.signal.with_file_name(format!("{stem}-detections.csv"))
    });
    write_detections_csv(&dets, &out)?;
    Ok(format!("{} events in {secs:.3} s\n{}\n", dets.len(), out.display()))
}

fn column_of<'a>(sig: &'a poresim_core::SignalBundle, name: &str) -> Option<&'a [f64]> {
    match name {
        "Current" => Some(&sig.current),
        _ => sig.components().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c),
    }
}

fn split_named(flag: &str, s: &str) -> Result<(String, PathBuf)> {
    let (name, dir) = s
        .split_once('=')
        .filter(|(n, d)| !n.is_empty() && !d.is_empty())
        .ok_or_else(|| CliError::flag(flag, format!("expected NAME=DIR, got '{s}'")))?;
    Ok((name.to_string(), PathBuf::from(dir)))
}

fn read_runtimes(path: &Path) -> Result<BTreeMap<(String, String), f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::flag("--runtimes", format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, rec) in r.deserialize::<(String, String, f64)>().enumerate() {
        let (prog, file, secs) = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            message: e.to_string(),
        })?;
        out.insert((prog, file), secs);
    }
    Ok(out)
}

/// Score every requested program over every file of a corpus.
pub fn benchmark_report(a: &BenchmarkArgs) -> Result<BenchmarkReport> {
    if a.bin_size == 0 {
        return Err(CliError::flag("--bin-size", "must be at least 1"));
    }
    let entries: Vec<CorpusEntry> = corpus::read_manifest(&a.corpus.join(corpus::MANIFEST))?;
    let map = match &a.columns {
        Some(s) => ColumnMap::parse(s)?,
        None => ColumnMap::detections(),
    };
    let programs = a
        .programs
        .iter()
        .map(|p| split_named("--program", p))
        .collect::<Result<Vec<_>>>()?;
    let bin_programs = a.bins.iter().map(|p| split_named("--bins", p)).collect::<Result<Vec<_>>>()?;
    if programs.is_empty() && bin_programs.is_empty() && !a.self_truth && !a.threshold_detector {
        return Err(CliError::flag(
            "--program",
            "nothing to score; pass --program, --bins, --self-truth or --threshold-detector",
        ));
    }
    let runtimes = a.runtimes.as_deref().map(read_runtimes).transpose()?.unwrap_or_default();
    let detector = a.detector.detector();

    let mut scores: Vec<FileScore> = Vec::new();
    for entry in &entries {
        let files = entry.files(&a.corpus);
        let truth = read_event_details_csv(&files.details)?;
        let samples = match entry.samples {
            Some(n) => n,
            None => read_signal_csv(&files.signal)?.len(),
        };
        let input = |program: &'static str, runtime_s: Option<f64>| ScoreInput {
            program,
            file: &entry.file,
            truth: &truth,
            baseline: entry.vshift,
            signal_len: samples,
            tolerance: a.tolerance,
            bin_size: a.bin_size,
            runtime_s,
        };
        let runtime = |prog: &str| runtimes.get(&(prog.to_string(), entry.file.clone())).copied();

        if a.self_truth {
            let dets = read_detections_csv(&files.details, &ColumnMap::event_details(), Some(entry.vshift))?;
            scores.push(input("truth", runtime("truth")).events(&dets));
        }
        if a.threshold_detector {
            let sig = read_signal_csv(&files.signal)?;
            let started = Instant::now();
            let dets = detector.detect(&sig.current)?;
            let secs = started.elapsed().as_secs_f64();
            scores.push(input("threshold", Some(secs)).events(&dets));
        }
        let pattern_path = |dir: &Path| dir.join(a.pattern.replace("{file}", &entry.file));
        for (name, dir) in &programs {
            let dets: Vec<DetectionRecord> = read_detections_csv(&pattern_path(dir), &map, Some(entry.vshift))?;
            let mut s = input("", runtime(name)).events(&dets);
            s.program = name.clone();
            scores.push(s);
        }
        for (name, dir) in &bin_programs {
            let bins = read_bins_csv(&pattern_path(dir), a.bin_threshold)?;
            let mut s = input("", runtime(name)).bins(&bins.keys().copied().collect());
            s.program = name.clone();
            scores.push(s);
        }
    }
    Ok(BenchmarkReport::new(scores, a.tolerance, a.bin_size)?)
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<String> {
    let report = benchmark_report(a)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let (csv_path, json_path) = (a.out.join("report.csv"), a.out.join("report.json"));
    report.write_csv(&csv_path)?;
    report.write_json(&json_path)?;
    let mut s = report.summary_table();
    let _ = writeln!(s, "{}\n{}", csv_path.display(), json_path.display());
    Ok(s)
}

pub fn serve(a: &ServeArgs) -> Result<String> {
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    rt.block_on(crate::service::serve(a.addr, a.out.clone()))
        .map_err(|e| Error::Internal(format!("{}: {e}", a.addr)))?;
    Ok(String::new())
}
