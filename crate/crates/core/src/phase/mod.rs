//! Inter-antenna phase-difference baseline: chain calibration, STO/SFO
//! removal, unwrapping and the four window feature constructions.

use serde::{Deserialize, Serialize};

use crate::csi::{ComplexSample, CsiPacket, Window};

pub use crate::sim::geometry::wrap_angle as wrap;

/// Remove `2 pi` jumps so every successive difference lies in `(-pi, pi]`.
pub fn unwrap_phase(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut offset = 0.0;
    for (i, &x) in series.iter().enumerate() {
        if i > 0 {
            let prev = series[i - 1];
            let step = x - prev;
            offset += wrap(step) - step;
        }
        out.push(x + offset);
    }
    out
}

/// Subtract the least-squares line `a k + b` shared by all antennas.
///
/// The common slope and intercept come from regressing the antenna-averaged
/// phase on the subcarrier position, which is the joint least-squares fit
/// over all (antenna, subcarrier) points. Inter-antenna differences are
/// untouched.
pub fn remove_sto_sfo(phases: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n_sub = phases.first().map_or(0, Vec::len);
    if n_sub == 0 {
        return phases.to_vec();
    }
    let n_ant = phases.len() as f64;
    let mean_k = (n_sub as f64 - 1.0) / 2.0;
    let (mut sxy, mut sxx, mut sy) = (0.0, 0.0, 0.0);
    for k in 0..n_sub {
        let y = phases.iter().map(|row| row[k]).sum::<f64>() / n_ant;
        let x = k as f64 - mean_k;
        sxy += x * y;
        sxx += x * x;
        sy += y;
    }
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = sy / n_sub as f64;
    phases
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, p)| p - (a * (k as f64 - mean_k) + b))
                .collect()
        })
        .collect()
}

/// Per-antenna, per-subcarrier chain phase offsets relative to a reference antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCalibration {
    pub offsets: Vec<Vec<f64>>,
}

impl PhaseCalibration {
    pub fn identity(n_ant: usize, n_sub: usize) -> Self {
        Self {
            offsets: vec![vec![0.0; n_sub]; n_ant],
        }
    }

    /// Estimate offsets from packets where every antenna saw the same
    /// channel (an RF splitter capture).
    ///
    /// `offsets[a][k] = arg(sum_t csi[a][k] conj(csi[ref][k]))`; per-packet
    /// common phase and timing offsets cancel in the product.
    pub fn estimate(packets: &[CsiPacket], reference: usize) -> Option<Self> {
        let first = packets.first()?;
        let (n_ant, n_sub) = (first.n_ant(), first.n_sub());
        let mut acc = vec![vec![ComplexSample::new(0.0, 0.0); n_sub]; n_ant];
        for p in packets {
            for a in 0..n_ant {
                for k in 0..n_sub {
                    acc[a][k] += p.csi[a][k] * p.csi[reference][k].conj();
                }
            }
        }
        Some(Self {
            offsets: acc.iter().map(|row| row.iter().map(|c| wrap(c.arg())).collect()).collect(),
        })
    }

    /// Rotate out the estimated offsets.
    pub fn apply(&self, packet: &CsiPacket) -> CsiPacket {
        let mut out = packet.clone();
        for (row, off) in out.csi.iter_mut().zip(&self.offsets) {
            for (h, &o) in row.iter_mut().zip(off) {
                *h *= ComplexSample::from_polar(1.0, -o);
            }
        }
        out
    }
}

/// Calibrated, STO/SFO-corrected phase difference `C - A` per subcarrier,
/// wrapped into `(-pi, pi]`.
pub fn packet_phase_difference(packet: &CsiPacket, pair: (usize, usize), cal: &PhaseCalibration) -> Vec<f64> {
    let p = cal.apply(packet);
    let phases: Vec<Vec<f64>> = (0..p.n_ant()).map(|a| unwrap_phase(&p.phases(a))).collect();
    let clean = remove_sto_sfo(&phases);
    clean[pair.1].iter().zip(&clean[pair.0]).map(|(c, a)| wrap(c - a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseVariant {
    /// Mean over all subcarriers and packets.
    A,
    /// Mean of the first subcarrier.
    B,
    /// Positive/negative sub-window votes per subcarrier.
    C,
    /// Effective phase difference per subcarrier.
    D,
}

impl PhaseVariant {
    pub const ALL: [PhaseVariant; 4] = [PhaseVariant::A, PhaseVariant::B, PhaseVariant::C, PhaseVariant::D];
}

impl std::str::FromStr for PhaseVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "c" => Ok(Self::C),
            "d" => Ok(Self::D),
            other => Err(format!("unknown phase variant `{other}`")),
        }
    }
}

/// Vote counts of one subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubWindowVote {
    pub positive: usize,
    pub negative: usize,
}

/// Fraction of the noisiest sub-windows dropped before voting.
const DROP_FRACTION: f64 = 0.2;
/// Half-width of the coverage interval for the effective phase difference.
const COVER_RAD: f64 = 1.0;

fn time_unwrapped(diffs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    // transpose to [subcarrier][packet], unwrap along time
    let n_sub = diffs.first().map_or(0, Vec::len);
    (0..n_sub)
        .map(|k| unwrap_phase(&diffs.iter().map(|d| d[k]).collect::<Vec<_>>()))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Equal-count chunks of `0..n`, reducing the count when too short.
fn sub_windows(n: usize, requested: usize) -> Vec<std::ops::Range<usize>> {
    let count = requested.min(n / 2).max(1);
    if count < requested {
        log::warn!("{n} packets cannot fill {requested} sub-windows; using {count}");
    }
    (0..count).map(|i| i * n / count..(i + 1) * n / count).collect()
}

/// Sub-window ranges kept after dropping the highest-variance ones, with
/// each kept sub-window's time-unwrapped series per subcarrier.
fn retained(diffs: &[Vec<f64>], n_subwindows: usize) -> Vec<Vec<Vec<f64>>> {
    let ranges = sub_windows(diffs.len(), n_subwindows);
    let mut scored: Vec<(f64, usize, Vec<Vec<f64>>)> = ranges
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let series = time_unwrapped(&diffs[r]);
            let var = mean(
                &series
                    .iter()
                    .map(|s| {
                        let m = mean(s);
                        mean(&s.iter().map(|x| (x - m).powi(2)).collect::<Vec<_>>())
                    })
                    .collect::<Vec<_>>(),
            );
            (var, i, series)
        })
        .collect();
    let drop = (DROP_FRACTION * scored.len() as f64).floor() as usize;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(scored.len() - drop);
    scored.sort_by_key(|s| s.1);
    scored.into_iter().map(|s| s.2).collect()
}

/// Per-subcarrier votes from the sign of each retained sub-window's mean difference.
pub fn sub_window_votes(diffs: &[Vec<f64>], n_subwindows: usize) -> Vec<SubWindowVote> {
    let n_sub = diffs.first().map_or(0, Vec::len);
    let mut votes = vec![SubWindowVote::default(); n_sub];
    for sw in retained(diffs, n_subwindows) {
        for (k, series) in sw.iter().enumerate() {
            let m = wrap(mean(series));
            if m > 0.0 {
                votes[k].positive += 1;
            } else if m < 0.0 {
                votes[k].negative += 1;
            }
        }
    }
    votes
}

/// Value among `obs` that covers the most observations within `COVER_RAD`;
/// ties go to the smallest mean absolute wrapped error, then the smallest
/// magnitude, then the smallest value.
///
/// With an even number of observations the error is flat between the two
/// middle values, so the magnitude rule keeps the result odd under negation.
pub fn effective_phase(obs: &[f64]) -> f64 {
    let mut best: Option<(usize, f64, f64)> = None;
    for &v in obs {
        let mut cover = 0;
        let mut err = 0.0;
        for &o in obs {
            let e = wrap(o - v).abs();
            if e <= COVER_RAD {
                cover += 1;
            }
            err += e;
        }
        err /= obs.len() as f64;
        let better = match best {
            None => true,
            Some((bc, be, bv)) => {
                let tol = 1e-12 * be.max(1e-300);
                cover > bc
                    || (cover == bc
                        && (err < be - tol
                            || ((err - be).abs() <= tol && (v.abs() < bv.abs() || (v.abs() == bv.abs() && v < bv)))))
            }
        };
        if better {
            best = Some((cover, err, v));
        }
    }
    best.map_or(0.0, |b| b.2)
}

/// Window feature from per-packet wrapped phase differences `diffs[packet][subcarrier]`.
///
/// (a) 1 value, (b) 1 value, (c) `2 * n_sub` values laid out as
/// `[pos_0, neg_0, pos_1, neg_1, ...]`, (d) `n_sub` values.
pub fn phase_feature_from_diffs(diffs: &[Vec<f64>], variant: PhaseVariant, n_subwindows: usize) -> Vec<f64> {
    let n_sub = diffs.first().map_or(0, Vec::len);
    if diffs.is_empty() {
        let width = match variant {
            PhaseVariant::A | PhaseVariant::B => 1,
            PhaseVariant::C => 60,
            PhaseVariant::D => 30,
        };
        return vec![0.0; width];
    }
    match variant {
        PhaseVariant::A => {
            let series = time_unwrapped(diffs);
            vec![mean(&series.iter().map(|s| mean(s)).collect::<Vec<_>>())]
        }
        PhaseVariant::B => {
            let series = time_unwrapped(diffs);
            vec![mean(&series[0])]
        }
        PhaseVariant::C => sub_window_votes(diffs, n_subwindows)
            .iter()
            .flat_map(|v| [v.positive as f64, v.negative as f64])
            .collect(),
        PhaseVariant::D => (0..n_sub)
            .map(|k| effective_phase(&diffs.iter().map(|d| d[k]).collect::<Vec<_>>()))
            .collect(),
    }
}

/// Phase-difference feature of a window.
pub fn phase_feature(
    window: &Window,
    variant: PhaseVariant,
    n_subwindows: usize,
    pair: (usize, usize),
    cal: &PhaseCalibration,
) -> Vec<f64> {
    let diffs: Vec<Vec<f64>> = window
        .packets
        .iter()
        .map(|p| packet_phase_difference(p, pair, cal))
        .collect();
    phase_feature_from_diffs(&diffs, variant, n_subwindows)
}
