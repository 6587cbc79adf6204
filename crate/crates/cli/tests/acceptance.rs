//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs::File;
use std::io::{BufReader, Read};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use poresim_cli::service::{router, AppState, JobResult};
use poresim_core::bench::{match_events, DetectionRecord, ScoreInput, ThresholdDetector, BenchmarkReport};
use poresim_core::corpus::{self, CorpusEntry, Variant};
use poresim_core::events::{signal_length, EventRecord};
use poresim_core::filters::rc_filter_ratio;
use poresim_core::io::{read_event_details_csv, scan_column};
use poresim_core::noise::{ac_noise, colored_noise};
use poresim_core::psd::welch_psd;
use poresim_core::rng::{stream, Stream};
use poresim_core::{assemble, GenerationConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tower::ServiceExt;

const SEED: u64 = 20_240_917;
const CORPUS_BUDGET: Duration = Duration::from_secs(300);

type Outcome = Result<String, String>;

fn poresim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_poresim"))
        .args(args)
        .env_remove("PORESIM_OUTPUT_DIR")
        .output()
        .expect("spawn poresim")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn build_corpus(dir: &Path) -> Result<Duration, String> {
    let started = Instant::now();
    let out = poresim(&["corpus", "--seed", &SEED.to_string(), "--out", dir.to_str().unwrap()]);
    let elapsed = started.elapsed();
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    Ok(elapsed)
}

struct FileFacts {
    entry: CorpusEntry,
    records: Vec<EventRecord>,
    rows: usize,
    noise_std: f64,
}

fn corpus_facts(dir: &Path) -> Result<Vec<FileFacts>, String> {
    let entries = corpus::read_manifest(&dir.join(corpus::MANIFEST)).map_err(|e| e.to_string())?;
    entries
        .into_iter()
        .map(|entry| {
            let files = entry.files(dir);
            let records = read_event_details_csv(&files.details).map_err(|e| e.to_string())?;
            let (rows, _, noise_std) = scan_column(&files.signal, "Noise").map_err(|e| e.to_string())?;
            Ok(FileFacts {
                entry,
                records,
                rows,
                noise_std,
            })
        })
        .collect()
}

fn criterion_corpus(facts: &[FileFacts], elapsed: Duration) -> Outcome {
    ensure(facts.len() == 105, || format!("{} files", facts.len()))?;
    let mut grid: Vec<(u64, u64, u64)> = facts
        .iter()
        .map(|f| (f.entry.density.to_bits(), f.entry.nsigma.to_bits(), f.entry.vshift.to_bits()))
        .collect();
    grid.sort_unstable();
    grid.dedup();
    ensure(grid.len() == 105, || "duplicate grid points".into())?;
    for f in facts {
        let e = &f.entry;
        ensure(corpus::DENSITIES.contains(&e.density), || format!("{}: density {}", e.file, e.density))?;
        ensure(corpus::NSIGMAS.contains(&e.nsigma), || format!("{}: nsigma {}", e.file, e.nsigma))?;
        ensure(f.records.len() == 100, || format!("{}: {} events", e.file, f.records.len()))?;
        let (lo, hi) = if e.density == 10.0 { (100, 1000) } else { (10, 100) };
        for r in &f.records {
            let depth = r.amplitude(e.vshift);
            ensure((depth - 3.0).abs() < 1e-9, || format!("{}: depth {depth}", e.file))?;
            ensure((lo..=hi).contains(&r.width), || format!("{}: width {}", e.file, r.width))?;
        }
    }
    let vshifts: std::collections::BTreeSet<u64> = facts.iter().map(|f| f.entry.vshift.to_bits()).collect();
    ensure(vshifts.len() == 7, || format!("{} vshift values", vshifts.len()))?;
    ensure(elapsed < CORPUS_BUDGET, || format!("build took {:.1} s", elapsed.as_secs_f64()))?;
    Ok(format!(
        "105 files x 100 events at depth 3 nA, built in {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_length(facts: &[FileFacts]) -> Outcome {
    let mut worst = 0.0f64;
    for f in facts {
        let n: usize = f.records.iter().map(|r| r.width).sum();
        let dev = (f.rows as f64 - n as f64 * 100.0 / f.entry.density).abs();
        worst = worst.max(dev);
        ensure(dev <= 1.0, || format!("{}: |l - n*100/d| = {dev}", f.entry.file))?;
        ensure(f.rows == signal_length(n, f.entry.density), || format!("{}: length", f.entry.file))?;
    }
    Ok(format!("max |l - n*100/d| = {worst}"))
}

fn criterion_noise(facts: &[FileFacts]) -> Outcome {
    let mut worst = 0.0f64;
    for f in facts {
        let rel = (f.noise_std * f.entry.nsigma - 3.0).abs() / 3.0;
        worst = worst.max(rel);
        ensure(rel <= 0.01, || format!("{}: std*nsigma = {}", f.entry.file, f.noise_std * f.entry.nsigma))?;
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn criterion_rc() -> Outcome {
    let mut worst = 0.0f64;
    for k in [0.05, 0.25, 1.0] {
        let mut step = vec![1.0f64; 10_001];
        step[0] = 0.0;
        let y = rc_filter_ratio(&step, k).map_err(|e| e.to_string())?;
        for (i, v) in y.iter().enumerate().skip(1) {
            let exact = 1.0 - (1.0 - k).powi(i as i32);
            let rel = (v - exact).abs() / exact.abs();
            worst = worst.max(rel);
            ensure(rel <= 1e-12, || format!("k={k}, i={i}: {v} vs {exact}"))?;
        }
    }
    Ok(format!("max relative error {worst:.2e} over 10^4 steps"))
}

fn criterion_colored() -> Outcome {
    let n = 1 << 17;
    let seg = 1 << 14;
    let mut rng = stream(SEED, Stream::Noise);
    let mut mean_power: Vec<f64> = Vec::new();
    let mut freq = Vec::new();
    for _ in 0..64 {
        let x: Vec<f64> = colored_noise(n, 1.2, &mut rng).map_err(|e| e.to_string())?;
        let p = welch_psd(&x, 1.0, seg, seg / 2).map_err(|e| e.to_string())?;
        if mean_power.is_empty() {
            mean_power = vec![0.0; p.power.len()];
            freq = p.frequency.clone();
        }
        for (m, v) in mean_power.iter_mut().zip(&p.power) {
            *m += v / 64.0;
        }
    }
    let ensemble = poresim_core::Psd {
        frequency: freq,
        power: mean_power,
    };
    let slope = ensemble
        .loglog_slope(4.0 / seg as f64, 0.5)
        .ok_or("no slope")?;
    ensure((slope + 1.2).abs() <= 0.15, || format!("slope {slope:.3}"))?;

    let fs = 10_000.0;
    let x: Vec<f64> = ac_noise(1 << 18, fs, 1.0, 3, &mut rng).map_err(|e| e.to_string())?;
    let p = welch_psd(&x, fs, 1 << 15, 1 << 14).map_err(|e| e.to_string())?;
    let peak = p
        .power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| p.frequency[i])
        .unwrap_or_default();
    ensure((peak - 50.0).abs() <= 2.0 * p.resolution(), || format!("AC peak at {peak} Hz"))?;
    let bands: Vec<f64> = [50.0, 100.0, 150.0].iter().map(|f| p.band_power(*f, 4)).collect();
    let (r2, r3) = (bands[1] / bands[0], bands[2] / bands[0]);
    ensure((r2 * 16.0 - 1.0).abs() <= 0.1, || format!("P100/P50 = {r2:.5}"))?;
    ensure((r3 * 81.0 - 1.0).abs() <= 0.1, || format!("P150/P50 = {r3:.6}"))?;
    Ok(format!(
        "slope {slope:.3}; AC ratios 1 : 1/{:.2} : 1/{:.2}",
        1.0 / r2,
        1.0 / r3
    ))
}

/// Maximum matching by exhaustive search over assignments.
fn brute_force_max(truth: &[(usize, usize)], dets: &[(usize, usize)], tol: usize) -> usize {
    fn go(i: usize, truth: &[(usize, usize)], dets: &[(usize, usize)], used: &mut Vec<bool>, tol: usize) -> usize {
        if i == truth.len() {
            return 0;
        }
        let mut best = go(i + 1, truth, dets, used, tol);
        for j in 0..dets.len() {
            let ok = truth[i].0.abs_diff(dets[j].0) <= tol && truth[i].1.abs_diff(dets[j].1) <= tol;
            if ok && !used[j] {
                used[j] = true;
                best = best.max(1 + go(i + 1, truth, dets, used, tol));
                used[j] = false;
            }
        }
        best
    }
    go(0, truth, dets, &mut vec![false; dets.len()], tol)
}

fn record(s: usize, e: usize) -> EventRecord {
    EventRecord {
        start_index: s,
        end_index: e,
        width: e - s,
        mean_current: 27.0,
        level_currents: [27.0; 4],
        level_widths: [e - s, 0, 0, 0],
    }
}

fn criterion_harness(corpus_dir: &Path, report_dir: &Path, facts: &[FileFacts]) -> Outcome {
    let out = poresim(&[
        "benchmark",
        "--corpus",
        corpus_dir.to_str().unwrap(),
        "--self-truth",
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = std::fs::read_to_string(report_dir.join("report.json")).map_err(|e| e.to_string())?;
    let report: BenchmarkReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure(report.files.len() == 105, || format!("{} scored files", report.files.len()))?;
    for f in &report.files {
        let e = f.event.as_ref().ok_or("missing event score")?;
        ensure(
            e.true_pct == 100.0
                && e.false_pct == 0.0
                && e.mpe_width_pct == Some(0.0)
                && e.mpe_amplitude_pct == Some(0.0),
            || format!("{}: self-score {e:?}", f.file),
        )?;
    }

    // Every detection 11 points late: none may match its own event, and the
    // true rate counts only matches to a different event that happens to sit
    // within tolerance of the shifted span.
    let mut shifted_true = Vec::new();
    let mut coincidences = 0usize;
    for f in facts {
        let dets: Vec<DetectionRecord> = f
            .records
            .iter()
            .map(|r| DetectionRecord::new(r.start_index + 11, r.end_index + 11, r.amplitude(f.entry.vshift)))
            .collect();
        let m = match_events(&f.records, &dets, 10);
        ensure(m.pairs.iter().all(|&(t, d)| t != d), || format!("{}: shifted detection matched its own event", f.entry.file))?;
        coincidences += m.pairs.len();
        let score = ScoreInput {
            program: "shifted",
            file: &f.entry.file,
            truth: &f.records,
            baseline: f.entry.vshift,
            signal_len: f.rows,
            tolerance: 10,
            bin_size: 1024,
            runtime_s: None,
        }
        .events(&dets);
        shifted_true.push(score.event.map(|e| e.true_pct).unwrap_or(f64::NAN));
    }
    let max_shifted = shifted_true.iter().copied().fold(0.0, f64::max);
    ensure(max_shifted == 0.0, || {
        format!("shift by 11 leaves true_pct up to {max_shifted} ({coincidences} cross-event coincidences)")
    })?;

    let mut rng = StdRng::seed_from_u64(SEED);
    for instance in 0..1000 {
        let nt = rng.random_range(0..=8);
        let nd = rng.random_range(0..=8);
        let span = |rng: &mut StdRng| {
            let s = rng.random_range(0..120usize);
            (s, s + rng.random_range(1..40usize))
        };
        let truth: Vec<(usize, usize)> = (0..nt).map(|_| span(&mut rng)).collect();
        let dets: Vec<(usize, usize)> = (0..nd).map(|_| span(&mut rng)).collect();
        let t_recs: Vec<EventRecord> = truth.iter().map(|&(s, e)| record(s, e)).collect();
        let d_recs: Vec<DetectionRecord> = dets.iter().map(|&(s, e)| DetectionRecord::new(s, e, 3.0)).collect();
        let got = match_events(&t_recs, &d_recs, 10).matched();
        let want = brute_force_max(&truth, &dets, 10);
        ensure(got == want, || format!("instance {instance}: matcher {got}, brute force {want}"))?;
    }
    Ok("self-score 100/0 with MPE 0 on 105 files; 11-point shift gives 0%; matcher = brute force on 1000 instances".into())
}

fn criterion_detector() -> Outcome {
    let detector = ThresholdDetector::default();
    let mut worst_mpe = 0.0f64;
    for entry in corpus::plan(SEED, Variant::Noiseless) {
        let g = assemble::<f64>(&entry.config()).map_err(|e| e.to_string())?;
        let dets = detector.detect(&g.bundle.current).map_err(|e| format!("{}: {e}", entry.file))?;
        let s = ScoreInput {
            program: "threshold",
            file: &entry.file,
            truth: &g.records,
            baseline: entry.vshift,
            signal_len: g.bundle.len(),
            tolerance: 10,
            bin_size: 1024,
            runtime_s: None,
        }
        .events(&dets);
        let e = s.event.ok_or("missing event score")?;
        let mpe = e.mpe_width_pct.unwrap_or(f64::INFINITY);
        worst_mpe = worst_mpe.max(mpe);
        ensure(e.true_pct == 100.0 && e.false_pct == 0.0 && mpe <= 2.0, || {
            format!(
                "{}: true {} false {} mpe width {mpe}",
                entry.file, e.true_pct, e.false_pct
            )
        })?;
    }
    Ok(format!("100/0 on 105 noiseless files, worst MPE width {worst_mpe}%"))
}

fn same_bytes(a: &Path, b: &Path) -> Result<bool, String> {
    let open = |p: &Path| File::open(p).map(|f| BufReader::with_capacity(1 << 20, f)).map_err(|e| format!("{}: {e}", p.display()));
    let (mut ra, mut rb) = (open(a)?, open(b)?);
    let (mut ba, mut bb) = (vec![0u8; 1 << 16], vec![0u8; 1 << 16]);
    loop {
        let na = read_full(&mut ra, &mut ba)?;
        let nb = read_full(&mut rb, &mut bb)?;
        if na != nb || ba[..na] != bb[..nb] {
            return Ok(false);
        }
        if na == 0 {
            return Ok(true);
        }
    }
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> Result<usize, String> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]).map_err(|e| e.to_string())? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}

fn dir_files(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.path()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    v.sort();
    Ok(v)
}

fn criterion_determinism(first: &Path, second: &Path, scratch: &Path) -> Outcome {
    build_corpus(second)?;
    let (a, b) = (dir_files(first)?, dir_files(second)?);
    ensure(a.len() == b.len() && a.len() == 1 + 3 * 105, || format!("{} vs {} files", a.len(), b.len()))?;
    for (x, y) in a.iter().zip(&b) {
        ensure(x.file_name() == y.file_name(), || format!("{} vs {}", x.display(), y.display()))?;
        ensure(same_bytes(x, y)?, || format!("{} differs", x.display()))?;
    }
    let _ = std::fs::remove_dir_all(second);

    let mut cfg = GenerationConfig {
        name: "shared".into(),
        seed: 77,
        ..GenerationConfig::default()
    };
    cfg.drift.sinusoidal.enabled = true;
    cfg.drift.abrupt.enabled = true;
    let cfg_path = scratch.join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).map_err(|e| e.to_string())?;
    let cli_dir = scratch.join("cli");
    let out = poresim(&[
        "generate",
        "--seed",
        "77",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        cli_dir.to_str().unwrap(),
    ]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;

    let svc_dir = scratch.join("svc");
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let job: JobResult = rt.block_on(async {
        let body = serde_json::json!({ "config": cfg, "preview": false }).to_string();
        let resp = router(AppState::new(svc_dir.clone()))
            .oneshot(
                Request::post("/api/generate")
                    .header("content-type", "application/json")
                    .body(Body::from(body))
                    .unwrap(),
            )
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        if status != StatusCode::OK {
            return Err(format!("service returned {status}: {}", String::from_utf8_lossy(&bytes)));
        }
        serde_json::from_slice(&bytes).map_err(|e| e.to_string())
    })?;
    let cli_files = poresim_core::io::RunFiles::in_dir(&cli_dir, "shared");
    for (c, s) in [
        (&cli_files.signal, &job.files.signal),
        (&cli_files.details, &job.files.details),
        (&cli_files.params, &job.files.params),
    ] {
        ensure(same_bytes(c, s)?, || format!("{} and {} differ", c.display(), s.display()))?;
    }
    Ok("two corpus builds byte-identical (316 files); CLI and service outputs byte-identical".into())
}

fn run(name: &str, results: &mut Vec<bool>, f: impl FnOnce() -> Outcome) {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = started.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
        Err(detail) => println!("FAIL  {name}: {detail} [{secs:.1} s]"),
    }
    results.push(outcome.is_ok());
}

fn main() {
    // Respect `cargo test -- --list` and filters by running everything regardless.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let root = tempfile::tempdir().expect("tempdir");
    let corpus_a = root.path().join("corpus_a");
    let corpus_b = root.path().join("corpus_b");
    let reports = root.path().join("reports");
    let scratch = root.path().join("scratch");
    std::fs::create_dir_all(&scratch).unwrap();

    let mut results = Vec::new();
    let built = build_corpus(&corpus_a);
    let facts = built.as_ref().map_err(Clone::clone).and_then(|_| corpus_facts(&corpus_a));
    let with_facts = |f: &dyn Fn(&[FileFacts]) -> Outcome| match &facts {
        Ok(v) => f(v),
        Err(e) => Err(format!("corpus unavailable: {e}")),
    };

    run("corpus construction", &mut results, || {
        let elapsed = built.clone()?;
        with_facts(&|v| criterion_corpus(v, elapsed))
    });
    run("length/density law", &mut results, || with_facts(&criterion_length));
    run("noise calibration", &mut results, || with_facts(&criterion_noise));
    run("RC filter closed form", &mut results, criterion_rc);
    run("colored and AC noise spectra", &mut results, criterion_colored);
    run("harness oracle", &mut results, || {
        with_facts(&|v| criterion_harness(&corpus_a, &reports, v))
    });
    run("baseline detector on noiseless corpus", &mut results, criterion_detector);
    run("determinism", &mut results, || criterion_determinism(&corpus_a, &corpus_b, &scratch));

    let failed = results.iter().filter(|ok| !**ok).count();
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
