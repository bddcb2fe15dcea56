//! Per-packet feature bank: amplitude differences at selected subcarriers,
//! power delay profile (PCA-reduced) and the two-antenna multipath profile.

mod multipath;
mod pca;
mod pdp;
mod sequence;
mod vbss;

pub use multipath::{multipath_profile, MultipathProfile};
pub use pca::{fit_pdp_pca, PdpBasis};
pub use pdp::{power_delay_profile, PdpTransform};
pub use sequence::{
    build_feature_sequence, median_sequence_length, window_mean, FeatureExtractor, FeatureSequence,
    NormalizationStats,
};
pub use vbss::{covariance_scores, vbss_select};

use serde::{Deserialize, Serialize};

use crate::csi::CsiPacket;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("window has {0} packets, at least 2 are needed")]
    DegenerateWindow(usize),
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} has not been fitted")]
    NotFitted(&'static str),
    #[error("no training data: {0}")]
    NoData(&'static str),
}

/// How the amplitude-difference subcarriers are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Subcarrier 0 plus the top `n - 1` by covariance score, per window.
    Vbss,
    /// The first `n` subcarriers.
    First,
    /// Every reported subcarrier (`n` ignored).
    All,
}

/// Ranking score used by VbSS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VbssScore {
    /// Row sum of the covariance matrix, diagonal excluded.
    #[default]
    CovSum,
    /// Row sum of absolute covariances.
    AbsCovSum,
    /// Row sum of Pearson correlations.
    CorrSum,
}

/// Feature set selection; serialized as the feature config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub selection: Selection,
    /// Number of amplitude-difference subcarriers.
    pub n_sub: usize,
    pub vbss_score: VbssScore,
    /// PCA components of the 60-value PDP; 0 drops the PDP feature.
    pub m_pdp: usize,
    /// Use squared tap magnitudes instead of magnitudes.
    pub pdp_squared: bool,
    pub use_mp: bool,
    /// Upper clip of the eigenvalue ratio.
    pub mp_cap: f64,
    /// (A, C): left and right antenna indices.
    pub pair: (usize, usize),
    /// Antenna whose amplitudes drive VbSS; defaults to the right one of the pair.
    pub ref_antenna: Option<usize>,
    /// Fixed sequence length instead of the training median.
    pub seq_len: Option<usize>,
    /// Cap on the median-derived sequence length.
    pub max_seq_len: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            selection: Selection::Vbss,
            n_sub: 14,
            vbss_score: VbssScore::CovSum,
            m_pdp: 3,
            pdp_squared: false,
            use_mp: true,
            mp_cap: 1e6,
            pair: (0, 2),
            ref_antenna: None,
            seq_len: None,
            max_seq_len: Some(256),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self, n_sub_available: usize) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::InvalidConfig(m));
        if self.selection != Selection::All && !(1..=n_sub_available).contains(&self.n_sub) {
            return bad(format!("n_sub must lie in 1..={n_sub_available}, got {}", self.n_sub));
        }
        if self.m_pdp > 2 * n_sub_available {
            return bad(format!("m_pdp {} exceeds PDP length", self.m_pdp));
        }
        if self.pair.0 == self.pair.1 {
            return bad("antenna pair must name two antennas".into());
        }
        if !(self.mp_cap > 0.0) {
            return bad("mp_cap must be positive".into());
        }
        if self.seq_len == Some(0) {
            return bad("seq_len must be positive".into());
        }
        Ok(())
    }

    pub fn ref_antenna(&self) -> usize {
        self.ref_antenna.unwrap_or(self.pair.1)
    }

    /// Number of amplitude-difference features per step.
    pub fn amp_dim(&self, n_sub_available: usize) -> usize {
        match self.selection {
            Selection::All => n_sub_available,
            _ => self.n_sub,
        }
    }

    /// Per-step input dimension.
    pub fn dim(&self, n_sub_available: usize) -> usize {
        self.amp_dim(n_sub_available) + self.m_pdp + usize::from(self.use_mp)
    }
}

/// `|csi[C][k]| - |csi[A][k]|` for every subcarrier.
pub fn amplitude_difference(packet: &CsiPacket, pair: (usize, usize)) -> Vec<f64> {
    let (a, c) = pair;
    packet.csi[c]
        .iter()
        .zip(&packet.csi[a])
        .map(|(hc, ha)| hc.norm() - ha.norm())
        .collect()
}
