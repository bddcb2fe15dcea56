//! Packet delivery ratio against rider distance with a parked vehicle.

use serde::{Deserialize, Serialize};

use super::engine::{link_state, simulate};
use super::{Blocker, LossModel, Point, PropagationPath, Scenario, SimError};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RangeConfig {
    pub distances_m: Vec<f64>,
    /// Packets transmitted at each distance.
    pub packets: usize,
    /// Rider offset from the travel line, meters.
    pub lateral_m: f64,
    /// Attenuation of the person standing halfway along the direct ray.
    pub blocker_db: f64,
    pub loss_model: LossModel,
    pub rss_offset_db: f64,
    pub packet_rate_pps: f64,
}

impl Default for RangeConfig {
    fn default() -> Self {
        Self {
            distances_m: (1..=12).map(|i| 10.0 * i as f64).collect(),
            packets: 100_000,
            lateral_m: 2.0,
            blocker_db: 6.0,
            loss_model: LossModel::default(),
            rss_offset_db: -20.0,
            packet_rate_pps: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdrRow {
    pub distance_m: f64,
    pub nlos: bool,
    /// Noise-free mean RSS driving the loss process.
    pub rss_dbm: f64,
    pub sent: usize,
    pub received: usize,
    pub pdr: f64,
    /// Stationary delivery ratio of the loss model at this link state.
    pub expected_pdr: f64,
}

/// Stationary vehicle at the origin facing the rider `distance` meters ahead.
pub fn range_scenario(cfg: &RangeConfig, distance: f64, nlos: bool, seed: u64) -> Scenario {
    let rider = Point::new(distance, cfg.lateral_m);
    let mid = Point::new(distance / 2.0, cfg.lateral_m / 2.0);
    let blockers = if nlos {
        vec![Blocker {
            start: Point::new(mid.x, mid.y - 0.25),
            end: Point::new(mid.x, mid.y + 0.25),
            strength: 1.0,
        }]
    } else {
        Vec::new()
    };
    Scenario {
        ride_id: format!("range-{distance:.0}m-{}", if nlos { "nlos" } else { "los" }),
        rider_pos: rider,
        vehicle_speed: 0.0,
        vehicle_start_x: 0.0,
        duration_s: cfg.packets as f64 / cfg.packet_rate_pps,
        packet_rate_pps: cfg.packet_rate_pps,
        paths: vec![PropagationPath {
            blocked_extra_attenuation_db: cfg.blocker_db,
            ..PropagationPath::direct()
        }],
        blockers,
        noise_std: 0.0,
        timing_jitter: 0.0,
        loss_model: cfg.loss_model.clone(),
        rss: super::RssModel {
            offset_db: cfg.rss_offset_db,
            ..Default::default()
        },
        seed,
        ..Scenario::default()
    }
}

/// Simulated and closed-form delivery ratio at every configured distance.
pub fn pdr_curve(cfg: &RangeConfig, nlos: bool, seed: u64) -> Result<Vec<PdrRow>, SimError> {
    cfg.distances_m
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let sc = range_scenario(cfg, d, nlos, rng::derive_seed(seed, &format!("range/{i}/{nlos}")));
            let sent = (sc.duration_s * sc.packet_rate_pps).floor() as usize;
            let received = simulate(&sc)?.packets.len();
            let (rss, blocked) = link_state(&sc, Point::new(0.0, 0.0));
            Ok(PdrRow {
                distance_m: d,
                nlos: blocked,
                rss_dbm: rss,
                sent,
                received,
                pdr: received as f64 / sent.max(1) as f64,
                expected_pdr: sc.loss_model.expected_pdr(rss, blocked),
            })
        })
        .collect()
}
