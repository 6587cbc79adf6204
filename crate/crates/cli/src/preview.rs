//! Min/max decimation for waveform previews.

use serde::{Deserialize, Serialize};

pub const MAX_PREVIEW_POINTS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub time: Vec<f64>,
    pub current: Vec<f64>,
}

/// Keep every point when they fit in `max_points`; otherwise split the trace
/// into `max_points / 2` buckets and keep each bucket's minimum and maximum,
/// in time order.
pub fn decimate_minmax(time: &[f64], values: &[f64], max_points: usize) -> Preview {
    let n = values.len().min(time.len());
    if n <= max_points || max_points < 2 {
        return Preview {
            time: time[..n].to_vec(),
            current: values[..n].to_vec(),
        };
    }
    let buckets = max_points / 2;
    let mut out = Preview {
        time: Vec::with_capacity(2 * buckets),
        current: Vec::with_capacity(2 * buckets),
    };
    for b in 0..buckets {
        let (lo, hi) = (b * n / buckets, (b + 1) * n / buckets);
        let slice = &values[lo..hi];
        let (mut imin, mut imax) = (0, 0);
        for (i, v) in slice.iter().enumerate() {
            if *v < slice[imin] {
                imin = i;
            }
            if *v > slice[imax] {
                imax = i;
            }
        }
        let (a, b) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        for i in if a == b { vec![a] } else { vec![a, b] } {
            out.time.push(time[lo + i]);
            out.current.push(slice[i]);
        }
    }
    out
}
