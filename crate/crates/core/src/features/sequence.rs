//! Fixed-length, normalized per-packet feature sequences.

use serde::{Deserialize, Serialize};

use super::{amplitude_difference, fit_pdp_pca, multipath_profile, vbss_select, FeatureConfig, FeatureError, PdpBasis, PdpTransform, Selection};
use crate::csi::{CsiPacket, Window};

/// `steps[t][f]`; rows at `t >= valid_len` are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub steps: Vec<Vec<f64>>,
    pub valid_len: usize,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.steps.first().map_or(0, Vec::len)
    }

    /// Pad with zero rows (or truncate) to exactly `len` steps.
    pub fn from_rows(mut rows: Vec<Vec<f64>>, len: usize, dim: usize) -> Self {
        rows.truncate(len);
        let valid_len = rows.len();
        rows.resize(len, vec![0.0; dim]);
        Self { steps: rows, valid_len }
    }
}

/// Per-feature z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-8;

impl NormalizationStats {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self, FeatureError> {
        let mut n = 0usize;
        let mut mean: Vec<f64> = Vec::new();
        let mut m2: Vec<f64> = Vec::new();
        // Welford, one pass
        for r in rows {
            if mean.is_empty() {
                mean = vec![0.0; r.len()];
                m2 = vec![0.0; r.len()];
            }
            n += 1;
            for ((m, s), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(r) {
                let d = x - *m;
                *m += d / n as f64;
                *s += d * (x - *m);
            }
        }
        if n == 0 {
            return Err(FeatureError::NoData("normalization needs at least one step"));
        }
        let std = m2.iter().map(|s| (s / n as f64).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn normalize(&self, row: &mut [f64]) {
        for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = (*x - m) / s;
        }
    }

    pub fn denormalize(&self, row: &mut [f64]) {
        for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = *x * s + m;
        }
    }
}

fn lower_median(counts: &mut [usize]) -> usize {
    counts.sort_unstable();
    counts[(counts.len() - 1) / 2]
}

/// Lower median of the packet counts of `windows` (0 for no windows).
pub fn median_sequence_length(windows: &[Window]) -> usize {
    if windows.is_empty() {
        return 0;
    }
    let mut counts: Vec<usize> = windows.iter().map(Window::len).collect();
    lower_median(&mut counts)
}

/// Mean of the valid steps; the window-level vector given to classic classifiers.
pub fn window_mean(seq: &FeatureSequence) -> Vec<f64> {
    let dim = seq.dim();
    let mut out = vec![0.0; dim];
    if seq.valid_len == 0 {
        return out;
    }
    for row in &seq.steps[..seq.valid_len] {
        for (o, x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|o| *o /= seq.valid_len as f64);
    out
}

/// Fitted feature pipeline: everything needed to turn a window into a
/// normalized sequence at inference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub config: FeatureConfig,
    /// Subcarriers per antenna in the traces the extractor was fitted on.
    pub n_sub: usize,
    pub seq_len: usize,
    pub basis: Option<PdpBasis>,
    pub stats: Option<NormalizationStats>,
}

impl FeatureExtractor {
    /// Fit sequence length, PDP basis and normalization on training windows.
    pub fn fit(config: &FeatureConfig, train: &[Window]) -> Result<Self, FeatureError> {
        let n_sub = train
            .iter()
            .flat_map(|w| w.packets.first())
            .map(CsiPacket::n_sub)
            .next()
            .ok_or(FeatureError::NoData("no training packets"))?;
        config.validate(n_sub)?;
        let seq_len = match config.seq_len {
            Some(l) => l,
            None => {
                let m = median_sequence_length(train).max(1);
                config.max_seq_len.map_or(m, |cap| m.min(cap))
            }
        };
        let mut fx = Self {
            config: config.clone(),
            n_sub,
            seq_len,
            basis: None,
            stats: None,
        };
        if config.m_pdp > 0 {
            let t = PdpTransform::new(n_sub);
            let rows: Vec<Vec<f64>> = train
                .iter()
                .flat_map(|w| w.packets.iter().take(seq_len))
                .map(|p| t.pdp(p, config.pair, config.pdp_squared))
                .collect();
            fx.basis = Some(fit_pdp_pca(&rows, config.m_pdp)?);
        }
        let raw: Vec<Vec<f64>> = train
            .iter()
            .map(|w| fx.raw_steps(w))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        fx.stats = Some(NormalizationStats::fit(raw.iter().map(Vec::as_slice))?);
        Ok(fx)
    }

    /// Per-step feature width after fitting (PCA may have dropped components).
    pub fn dim(&self) -> usize {
        self.config.amp_dim(self.n_sub)
            + self.basis.as_ref().map_or(0, PdpBasis::dim)
            + usize::from(self.config.use_mp)
    }

    /// Subcarriers whose amplitude differences enter the features.
    pub fn selected_subcarriers(&self, window: &Window) -> Result<Vec<usize>, FeatureError> {
        let c = &self.config;
        match c.selection {
            Selection::All => Ok((0..self.n_sub).collect()),
            Selection::First => Ok((0..c.n_sub).collect()),
            Selection::Vbss => match vbss_select(&window.packets, c.n_sub, c.ref_antenna(), c.vbss_score) {
                Err(FeatureError::DegenerateWindow(n)) => {
                    log::warn!("window of {} with {n} packet(s): VbSS falls back to the first subcarriers", window.ride_id);
                    Ok((0..c.n_sub).collect())
                }
                other => other,
            },
        }
    }

    /// Un-normalized features of the first `seq_len` packets.
    pub fn raw_steps(&self, window: &Window) -> Result<Vec<Vec<f64>>, FeatureError> {
        if window.packets.is_empty() {
            return Ok(Vec::new());
        }
        let c = &self.config;
        let idx = self.selected_subcarriers(window)?;
        let t = self.basis.as_ref().map(|_| PdpTransform::new(self.n_sub));
        Ok(window
            .packets
            .iter()
            .take(self.seq_len)
            .map(|p| {
                let diff = amplitude_difference(p, c.pair);
                let mut row: Vec<f64> = idx.iter().map(|&k| diff[k]).collect();
                if let (Some(b), Some(t)) = (&self.basis, &t) {
                    row.extend(b.project(&t.pdp(p, c.pair, c.pdp_squared)));
                }
                if c.use_mp {
                    row.push(multipath_profile(p, c.pair, c.mp_cap).ratio);
                }
                row
            })
            .collect())
    }

    /// Normalized, zero-padded sequence for one window.
    pub fn sequence(&self, window: &Window) -> Result<FeatureSequence, FeatureError> {
        let stats = self.stats.as_ref().ok_or(FeatureError::NotFitted("normalization"))?;
        let mut rows = self.raw_steps(window)?;
        if rows.is_empty() {
            log::warn!("empty window of {} at {:.2} s: all-padding sequence", window.ride_id, window.start_time);
        }
        rows.iter_mut().for_each(|r| stats.normalize(r));
        Ok(FeatureSequence::from_rows(rows, self.seq_len, self.dim()))
    }
}

/// One-shot form of [`FeatureExtractor::sequence`] with explicit fitted parts.
pub fn build_feature_sequence(
    window: &Window,
    config: &FeatureConfig,
    stats: &NormalizationStats,
    basis: Option<&PdpBasis>,
    seq_len: usize,
) -> Result<FeatureSequence, FeatureError> {
    let n_sub = window.packets.first().map_or(30, CsiPacket::n_sub);
    let fx = FeatureExtractor {
        config: config.clone(),
        n_sub,
        seq_len,
        basis: basis.cloned(),
        stats: Some(stats.clone()),
    };
    fx.sequence(window)
}
