//! Reading detector outputs (third-party event tables and predicted bins).

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DetectionRecord;
use crate::error::{csv_err, Error, Result};
use crate::io::DETAILS_HEADER;

/// How the amplitude column is expressed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeKind {
    /// Blockade depth; the absolute value is used.
    #[default]
    Depth,
    /// Absolute current level; amplitude is `baseline - value`.
    Level,
}

/// Which CSV columns hold each detection field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub start: String,
    pub end: String,
    /// When absent, width is `end - start`.
    pub width: Option<String>,
    pub amplitude: Option<String>,
    pub amplitude_kind: AmplitudeKind,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self::event_details()
    }
}

impl ColumnMap {
    /// Mapping for event-details files written by this crate.
    pub fn event_details() -> Self {
        Self {
            start: DETAILS_HEADER[0].into(),
            end: DETAILS_HEADER[1].into(),
            width: Some(DETAILS_HEADER[2].into()),
            amplitude: Some(DETAILS_HEADER[3].into()),
            amplitude_kind: AmplitudeKind::Level,
        }
    }

    /// Mapping for [`write_detections_csv`] output.
    pub fn detections() -> Self {
        Self {
            start: "start".into(),
            end: "end".into(),
            width: Some("width".into()),
            amplitude: Some("amplitude".into()),
            amplitude_kind: AmplitudeKind::Depth,
        }
    }

    /// Parse `key=column` pairs separated by commas, e.g.
    /// `start=Start,end=End,amplitude=dI,kind=depth`. Unlisted keys keep the
    /// value from [`ColumnMap::detections`]; `width=` with an empty column
    /// name drops the width column.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = Self::detections();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::config("columns", format!("expected key=column, got {part:?}")))?;
            let v = v.trim().to_string();
            match k.trim() {
                "start" => map.start = v,
                "end" => map.end = v,
                "width" => map.width = (!v.is_empty()).then_some(v),
                "amplitude" => map.amplitude = (!v.is_empty()).then_some(v),
                "kind" => {
                    map.amplitude_kind = match v.as_str() {
                        "depth" => AmplitudeKind::Depth,
                        "level" => AmplitudeKind::Level,
                        other => return Err(Error::config("columns", format!("unknown kind {other:?}"))),
                    }
                }
                other => return Err(Error::config("columns", format!("unknown key {other:?}"))),
            }
        }
        Ok(map)
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            message: format!("no column named {name:?}"),
        })
}

/// Read a detection table, validate it and sort it by start.
///
/// `baseline` is required when the amplitude column holds absolute levels.
pub fn read_detections_csv(path: &Path, map: &ColumnMap, baseline: Option<f64>) -> Result<Vec<DetectionRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let start_i = column_index(&headers, &map.start, path)?;
    let end_i = column_index(&headers, &map.end, path)?;
    let width_i = map.width.as_deref().map(|w| column_index(&headers, w, path)).transpose()?;
    let amp_i = map.amplitude.as_deref().map(|a| column_index(&headers, a, path)).transpose()?;
    if amp_i.is_some() && map.amplitude_kind == AmplitudeKind::Level && baseline.is_none() {
        return Err(Error::config(
            "columns",
            "amplitude column holds current levels but no baseline was supplied",
        ));
    }

    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            row,
            message,
        };
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let field = |k: usize| rec.get(k).map(str::trim).ok_or_else(|| bad(format!("missing column {k}")));
        let index = |k: usize| -> Result<usize> {
            let s = field(k)?;
            s.parse::<usize>()
                .ok()
                .or_else(|| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite() && *v >= 0.0)
                        .map(|v| v.round() as usize)
                })
                .ok_or_else(|| bad(format!("not an index: {s:?}")))
        };
        let start = index(start_i)?;
        let end = index(end_i)?;
        if end < start {
            return Err(bad(format!("end {end} precedes start {start}")));
        }
        let width = match width_i {
            Some(k) => index(k)?,
            None => end - start,
        };
        if width == 0 {
            return Err(bad("zero-width detection".into()));
        }
        let amplitude = match amp_i {
            Some(k) => {
                let s = field(k)?;
                let v: f64 = s.parse().map_err(|_| bad(format!("not a number: {s:?}")))?;
                match map.amplitude_kind {
                    AmplitudeKind::Depth => v.abs(),
                    AmplitudeKind::Level => baseline.unwrap_or_default() - v,
                }
            }
            None => f64::NAN,
        };
        out.push(DetectionRecord {
            start,
            end,
            width,
            amplitude,
        });
    }
    out.sort_by_key(|d| (d.start, d.end));
    Ok(out)
}

pub fn write_detections_csv(records: &[DetectionRecord], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["start", "end", "width", "amplitude"]).map_err(|e| csv_err(path, e))?;
    let mut buf = ryu::Buffer::new();
    for d in records {
        w.write_record([
            d.start.to_string().as_str(),
            d.end.to_string().as_str(),
            d.width.to_string().as_str(),
            buf.format(d.amplitude),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a predicted-bins table with columns `bin_index,probability`,
/// keeping bins whose probability is at least `threshold`.
pub fn read_bins_csv(path: &Path, threshold: f64) -> Result<BTreeMap<usize, f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let bi = column_index(&headers, "bin_index", path)?;
    let pi = column_index(&headers, "probability", path)?;
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |m: String| Error::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            message: m,
        };
        let b: usize = rec[bi].trim().parse().map_err(|_| bad(format!("bad bin index {:?}", &rec[bi])))?;
        let p: f64 = rec[pi].trim().parse().map_err(|_| bad(format!("bad probability {:?}", &rec[pi])))?;
        if p >= threshold {
            out.insert(b, p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_row_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "start,end,width,amplitude\n5,10,5,1.0\n20,oops,5,1.0\n").unwrap();
        match read_detections_csv(&p, &ColumnMap::detections(), None) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn width_derived_when_unmapped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "Start,Stop,dI\n300,340,-2.5\n100,112,2.0\n").unwrap();
        let map = ColumnMap::parse("start=Start,end=Stop,width=,amplitude=dI,kind=depth").unwrap();
        let d = read_detections_csv(&p, &map, None).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!((d[0].start, d[0].end, d[0].width, d[0].amplitude), (100, 112, 12, 2.0));
        assert_eq!((d[1].width, d[1].amplitude), (40, 2.5));
    }

    #[test]
    fn unknown_column_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(read_detections_csv(&p, &ColumnMap::detections(), None).is_err());
        assert!(ColumnMap::parse("bogus=1").is_err());
    }

    #[test]
    fn level_amplitudes_need_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let rec = crate::events::EventRecord {
            start_index: 3,
            end_index: 9,
            width: 6,
            mean_current: 27.5,
            level_currents: [27.5; 4],
            level_widths: [6, 0, 0, 0],
        };
        crate::io::write_event_details_csv(&[rec], &p).unwrap();
        assert!(read_detections_csv(&p, &ColumnMap::event_details(), None).is_err());
        let d = read_detections_csv(&p, &ColumnMap::event_details(), Some(30.0)).unwrap();
        assert_eq!(d, vec![DetectionRecord { start: 3, end: 9, width: 6, amplitude: 2.5 }]);
    }

    #[test]
    fn detections_round_trip_and_bins() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let recs = vec![DetectionRecord::new(1, 9, 0.1 + 0.2), DetectionRecord::new(20, 31, 3.0)];
        write_detections_csv(&recs, &p).unwrap();
        assert_eq!(read_detections_csv(&p, &ColumnMap::detections(), None).unwrap(), recs);

        let b = dir.path().join("bins.csv");
        std::fs::write(&b, "bin_index,probability\n0,0.9\n1,0.2\n5,0.5\n").unwrap();
        let bins = read_bins_csv(&b, 0.5).unwrap();
        assert_eq!(bins.keys().copied().collect::<Vec<_>>(), vec![0, 5]);
    }
}
