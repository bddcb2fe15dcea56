use super::{Condition, CsiPacket, Side};

/// A labeled time slice of packets: the unit of classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub packets: Vec<CsiPacket>,
    pub label: Side,
    pub ride_id: String,
    pub condition: Condition,
    pub start_time: f64,
}

impl Window {
    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }
}

/// Slice a trace into half-open windows `[start + k*stride, start + k*stride + window_len)`.
///
/// Packets are assumed sorted by timestamp. Empty windows are dropped; a
/// ride's tail windows shorter than `window_len` are kept. Returns the packet
/// slices as index ranges so callers can attach their own labels.
pub fn window_ranges(trace: &[CsiPacket], window_len: f64, stride: f64) -> Vec<(f64, std::ops::Range<usize>)> {
    assert!(window_len > 0.0 && stride > 0.0, "window_len and stride must be positive");
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return Vec::new();
    };
    let t0 = first.timestamp;
    let t_end = last.timestamp;
    let mut out = Vec::new();
    let mut lo = 0usize;
    let mut hi = 0usize;
    let mut k = 0u64;
    loop {
        // k*stride rather than accumulation keeps the grid exact
        let start = t0 + k as f64 * stride;
        if start > t_end {
            break;
        }
        let end = start + window_len;
        while lo < trace.len() && trace[lo].timestamp < start {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < trace.len() && trace[hi].timestamp < end {
            hi += 1;
        }
        if hi > lo {
            out.push((start, lo..hi));
        }
        k += 1;
    }
    out
}

/// Build labeled windows from one ride.
pub fn make_windows(
    trace: &[CsiPacket],
    window_len: f64,
    stride: f64,
    label: Side,
    ride_id: &str,
    condition: Condition,
) -> Vec<Window> {
    window_ranges(trace, window_len, stride)
        .into_iter()
        .map(|(start_time, r)| Window {
            packets: trace[r].to_vec(),
            label,
            ride_id: ride_id.to_string(),
            condition,
            start_time,
        })
        .collect()
}
