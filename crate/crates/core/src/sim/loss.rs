//! Packet-loss process: independent link loss plus geometric bursts while the
//! direct ray is blocked.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

/// Logistic link budget: a packet received at `rss` dBm is lost with
/// probability `1 / (1 + exp((rss - sensitivity_dbm) / slope_db))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub sensitivity_dbm: f64,
    pub slope_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            sensitivity_dbm: -73.0,
            slope_db: 3.0,
        }
    }
}

impl LinkBudget {
    pub fn loss_prob(&self, rss_dbm: f64) -> f64 {
        1.0 / (1.0 + ((rss_dbm - self.sensitivity_dbm) / self.slope_db).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Independent per-packet loss, applied everywhere.
    pub base_loss_prob: f64,
    /// Burst start probability in nLoS, scaled by the link-loss probability.
    pub nlos_burst_prob: f64,
    /// Mean burst length in packets (geometric, support 1, 2, ...).
    pub burst_mean_len: f64,
    #[serde(default)]
    pub link: Option<LinkBudget>,
}

impl Default for LossModel {
    fn default() -> Self {
        Self {
            base_loss_prob: 0.005,
            nlos_burst_prob: 1.0,
            burst_mean_len: 8.0,
            link: Some(LinkBudget::default()),
        }
    }
}

impl LossModel {
    /// A model that never drops packets.
    pub fn lossless() -> Self {
        Self {
            base_loss_prob: 0.0,
            nlos_burst_prob: 0.0,
            burst_mean_len: 1.0,
            link: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("base_loss_prob", self.base_loss_prob), ("nlos_burst_prob", self.nlos_burst_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.burst_mean_len >= 1.0 && self.burst_mean_len.is_finite()) {
            return Err(format!("burst_mean_len must be >= 1, got {}", self.burst_mean_len));
        }
        if let Some(l) = &self.link {
            if !(l.slope_db > 0.0) {
                return Err("link slope_db must be positive".into());
            }
        }
        Ok(())
    }

    fn link_loss(&self, rss_dbm: f64) -> f64 {
        self.link.as_ref().map_or(0.0, |l| l.loss_prob(rss_dbm))
    }

    /// Independent (non-burst) loss probability at a given signal level.
    pub fn independent_loss(&self, rss_dbm: f64) -> f64 {
        1.0 - (1.0 - self.base_loss_prob) * (1.0 - self.link_loss(rss_dbm))
    }

    /// Per-packet burst start probability.
    pub fn burst_start(&self, rss_dbm: f64, nlos: bool) -> f64 {
        if !nlos {
            return 0.0;
        }
        match &self.link {
            Some(l) => self.nlos_burst_prob * l.loss_prob(rss_dbm),
            None => self.nlos_burst_prob,
        }
    }

    /// Stationary delivery ratio for a link held at a fixed state.
    ///
    /// With burst start probability `p`, mean burst length `m` and
    /// independent loss `q`, the fraction of packets outside bursts is
    /// `(1-p) / ((1-p) + p*m)`, each delivered with probability `1-q`.
    pub fn expected_pdr(&self, rss_dbm: f64, nlos: bool) -> f64 {
        let q = self.independent_loss(rss_dbm);
        let p = self.burst_start(rss_dbm, nlos);
        let m = self.burst_mean_len;
        let denom = (1.0 - p) + p * m;
        if denom <= 0.0 {
            return 0.0;
        }
        (1.0 - p) / denom * (1.0 - q)
    }
}

/// Stateful sampler for the loss process.
#[derive(Debug, Clone)]
pub struct LossProcess {
    model: LossModel,
    remaining_burst: u64,
}

impl LossProcess {
    pub fn new(model: LossModel) -> Self {
        Self {
            model,
            remaining_burst: 0,
        }
    }

    /// Decide whether the next packet is delivered.
    pub fn deliver<R: Rng + ?Sized>(&mut self, rng: &mut R, rss_dbm: f64, nlos: bool) -> bool {
        if self.remaining_burst > 0 {
            self.remaining_burst -= 1;
            return false;
        }
        let p = self.model.burst_start(rss_dbm, nlos);
        if p > 0.0 && rng.random::<f64>() < p {
            let extra = if self.model.burst_mean_len > 1.0 {
                let g = Geometric::new(1.0 / self.model.burst_mean_len).expect("valid probability");
                g.sample(rng)
            } else {
                0
            };
            self.remaining_burst = extra;
            return false;
        }
        let q = self.model.independent_loss(rss_dbm);
        !(q > 0.0 && rng.random::<f64>() < q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn lossless_delivers_everything() {
        let mut lp = LossProcess::new(LossModel::lossless());
        let mut r = rng::stream(1, "t");
        assert!((0..1000).all(|_| lp.deliver(&mut r, -90.0, true)));
        assert_eq!(LossModel::lossless().expected_pdr(-90.0, true), 1.0);
    }

    #[test]
    fn certain_loss_delivers_nothing() {
        let model = LossModel {
            base_loss_prob: 1.0,
            ..LossModel::lossless()
        };
        let mut lp = LossProcess::new(model.clone());
        let mut r = rng::stream(1, "t");
        assert!((0..1000).all(|_| !lp.deliver(&mut r, -30.0, false)));
        assert_eq!(model.expected_pdr(-30.0, false), 0.0);
    }

    #[test]
    fn bursty_pdr_matches_closed_form() {
        let model = LossModel {
            base_loss_prob: 0.05,
            nlos_burst_prob: 0.04,
            burst_mean_len: 6.0,
            link: None,
        };
        let mut lp = LossProcess::new(model.clone());
        let mut r = rng::stream(3, "t");
        let n = 200_000;
        let got = (0..n).filter(|_| lp.deliver(&mut r, 0.0, true)).count() as f64 / n as f64;
        let expect = model.expected_pdr(0.0, true);
        // closed form: 0.96/(0.96+0.24) * 0.95 = 0.76
        assert!((expect - 0.76).abs() < 1e-12);
        assert!((got - expect).abs() < 0.01, "got {got}, expected {expect}");
    }

    #[test]
    fn link_loss_is_half_at_sensitivity() {
        let l = LinkBudget::default();
        assert!((l.loss_prob(l.sensitivity_dbm) - 0.5).abs() < 1e-12);
        let strong = 1.0 / (1.0 + ((l.sensitivity_dbm + 40.0).abs() / l.slope_db).exp());
        assert!((l.loss_prob(-40.0) - strong).abs() < 1e-15);
        assert!(l.loss_prob(-40.0) < 1e-4);
    }
}
