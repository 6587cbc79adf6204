//! Run output files: signal CSV, event-details CSV and the parameter log.
//!
//! Numbers are written in their shortest round-trip form, so every file
//! re-parses to the exact in-memory values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{csv_err, Error, Result};
use crate::events::{EventRecord, MAX_LEVELS};
use crate::pipeline::{GenerationConfig, Generated, SignalBundle};
use crate::scalar::Real;

/// Event-details header, one column per field.
pub const DETAILS_HEADER: [&str; 12] = [
    "Event Start Points",
    "Event End Points",
    "Event Width",
    "Event Mean Current (nA)",
    "Level 0 Current (nA)",
    "Level 1 Current (nA)",
    "Level 2 Current (nA)",
    "Level 3 Current (nA)",
    "Level 0 Width (dPoints)",
    "Level 1 Width (dPoints)",
    "Level 2 Width (dPoints)",
    "Level 3 Width (dPoints)",
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(create(path)?))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().from_reader(file))
}

pub fn write_signal_csv<T: Real>(bundle: &SignalBundle<T>, path: &Path) -> Result<()> {
    bundle.check_lengths()?;
    let comps = bundle.components();
    let mut w = csv_writer(path)?;
    let mut header = vec!["Time", "Current"];
    header.extend(comps.iter().map(|(name, _)| *name));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let mut buf = ryu::Buffer::new();
    for i in 0..bundle.len() {
        w.write_field(buf.format(bundle.time[i])).map_err(|e| csv_err(path, e))?;
        w.write_field(buf.format(bundle.current[i])).map_err(|e| csv_err(path, e))?;
        for (_, col) in &comps {
            w.write_field(buf.format(col[i])).map_err(|e| csv_err(path, e))?;
        }
        w.write_record(None::<&[u8]>).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_f64(path: &Path, row: usize, field: &[u8]) -> Result<f64> {
    std::str::from_utf8(field)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("not a number: {:?}", String::from_utf8_lossy(field)),
        })
}

fn parse_usize(path: &Path, row: usize, field: &str) -> Result<usize> {
    let t = field.trim();
    t.parse::<usize>()
        .ok()
        .or_else(|| {
            // Accept integral floats such as "120.0".
            t.parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                .map(|v| v as usize)
        })
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("not a non-negative integer: {t:?}"),
        })
}

/// Read a signal CSV written by [`write_signal_csv`].
pub fn read_signal_csv(path: &Path) -> Result<SignalBundle<f64>> {
    let mut r = csv_reader(path)?;
    let headers = r.byte_headers().map_err(|e| csv_err(path, e))?.clone();
    let names: Vec<String> = headers
        .iter()
        .map(|h| String::from_utf8_lossy(h).into_owned())
        .collect();
    if names.len() < 2 || names[0] != "Time" || names[1] != "Current" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            message: "expected header starting with Time,Current".into(),
        });
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut rec = csv::ByteRecord::new();
    let mut row = 0;
    while r.read_byte_record(&mut rec).map_err(|e| csv_err(path, e))? {
        row += 1;
        if rec.len() != names.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(parse_f64(path, row, field)?);
        }
    }
    let mut take = |name: &str| names.iter().position(|n| n == name).map(|i| std::mem::take(&mut cols[i]));
    let time = take("Time").unwrap_or_default();
    let current = take("Current").unwrap_or_default();
    let sampfreq = if time.len() > 1 { 1.0 / (time[1] - time[0]) } else { 0.0 };
    Ok(SignalBundle {
        sampfreq,
        time,
        current,
        clean: take("Clean"),
        filtered: take("Filtered"),
        drift: take("Drift"),
        noise: take("Noise"),
    })
}

/// Streaming mean and population standard deviation of one signal-CSV
/// column, without materialising the file.
pub fn scan_column(path: &Path, column: &str) -> Result<(usize, f64, f64)> {
    let mut r = csv_reader(path)?;
    let headers = r.byte_headers().map_err(|e| csv_err(path, e))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column.as_bytes())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            message: format!("no column named {column:?}"),
        })?;
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    let mut rec = csv::ByteRecord::new();
    while r.read_byte_record(&mut rec).map_err(|e| csv_err(path, e))? {
        let field = rec.get(idx).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row: n + 1,
            message: "short row".into(),
        })?;
        let x = parse_f64(path, n + 1, field)?;
        n += 1;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    let sd = if n > 0 { (m2 / n as f64).sqrt() } else { 0.0 };
    Ok((n, mean, sd))
}

pub fn write_event_details_csv(records: &[EventRecord], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(DETAILS_HEADER).map_err(|e| csv_err(path, e))?;
    let mut buf = ryu::Buffer::new();
    for r in records {
        let mut fields: Vec<String> = vec![
            r.start_index.to_string(),
            r.end_index.to_string(),
            r.width.to_string(),
            buf.format(r.mean_current).to_string(),
        ];
        fields.extend(r.level_currents.iter().map(|c| buf.format(*c).to_string()));
        fields.extend(r.level_widths.iter().map(|w| w.to_string()));
        w.write_record(&fields).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_event_details_csv(path: &Path) -> Result<Vec<EventRecord>> {
    let mut r = csv_reader(path)?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().ne(DETAILS_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            message: "event-details header does not match the expected columns".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != DETAILS_HEADER.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("expected {} fields, found {}", DETAILS_HEADER.len(), rec.len()),
            });
        }
        let f = |k: usize| parse_f64(path, row, rec[k].as_bytes());
        let u = |k: usize| parse_usize(path, row, &rec[k]);
        let mut level_currents = [0.0; MAX_LEVELS];
        let mut level_widths = [0; MAX_LEVELS];
        for k in 0..MAX_LEVELS {
            level_currents[k] = f(4 + k)?;
            level_widths[k] = u(8 + k)?;
        }
        out.push(EventRecord {
            start_index: u(0)?,
            end_index: u(1)?,
            width: u(2)?,
            mean_current: f(3)?,
            level_currents,
            level_widths,
        });
    }
    Ok(out)
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Flat `key=value` lines, keys in dotted form (`noise.nsigma`), values as
/// JSON literals.
pub fn param_log_lines(cfg: &GenerationConfig) -> Vec<(String, String)> {
    let value = serde_json::to_value(cfg).expect("config serialises");
    let mut out = Vec::new();
    flatten("", &value, &mut out);
    out
}

pub fn write_param_log(cfg: &GenerationConfig, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "# poresim generation parameters").map_err(io)?;
    for (k, v) in param_log_lines(cfg) {
        writeln!(w, "{k}={v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_param_log(path: &Path) -> Result<GenerationConfig> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut root = Map::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            message,
        };
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| parse_err("expected key=value".into()))?;
        let value: Value = serde_json::from_str(raw).map_err(|e| parse_err(e.to_string()))?;
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            node = node
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .ok_or_else(|| parse_err(format!("{key} conflicts with a scalar key")))?;
        }
        node.insert(parts[parts.len() - 1].to_string(), value);
    }
    serde_json::from_value(Value::Object(root)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        message: e.to_string(),
    })
}

/// Paths of the three files of one run.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RunFiles {
    pub signal: PathBuf,
    pub details: PathBuf,
    pub params: PathBuf,
}

impl RunFiles {
    pub fn in_dir(dir: &Path, name: &str) -> Self {
        Self {
            signal: dir.join(format!("{name}.csv")),
            details: dir.join(format!("{name}-details.csv")),
            params: dir.join(format!("{name}-params.txt")),
        }
    }
}

/// Write the signal CSV, event-details CSV and parameter log of a run into `dir`.
pub fn write_run<T: Real>(dir: &Path, cfg: &GenerationConfig, generated: &Generated<T>) -> Result<RunFiles> {
    let files = RunFiles::in_dir(dir, &cfg.name);
    write_signal_csv(&generated.bundle, &files.signal)?;
    write_event_details_csv(&generated.records, &files.details)?;
    write_param_log(cfg, &files.params)?;
    Ok(files)
}
