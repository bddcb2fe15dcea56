//! Geometric multipath simulator for drive-by CSI traces.
//!
//! A vehicle carrying the receive array drives along `y = 0` in the `+x`
//! direction; the rider's phone transmits from a fixed point. Each packet's
//! CSI is the sum over propagation paths of `a_n * exp(-j 2 pi f tau_n)`
//! evaluated at every reported subcarrier and antenna, plus receiver
//! impairments and complex Gaussian noise.

mod corpus;
mod engine;
pub mod geometry;
pub mod loss;
mod range;

pub use corpus::{
    calibration_scenario, load_manifest, make_corpus, ride_scenario, trace_path, write_manifest, CorpusConfig, CorpusInfo,
    CorpusSpec, Manifest, ManifestRow,
};
pub use engine::{link_state, simulate, subcarrier_frequencies};
pub use range::{pdr_curve, range_scenario, PdrRow, RangeConfig};
pub use geometry::{antenna_phase_delta, path_response, Point, Propagation};
pub use loss::{LinkBudget, LossModel, LossProcess};

use serde::{Deserialize, Serialize};

use crate::csi::{AntennaConfig, Condition, Side};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace error: {0}")]
    Trace(#[from] crate::csi::TraceError),
    #[error("manifest error: {0}")]
    Manifest(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathKind {
    Direct,
    Reflector { point: Point },
}

/// One propagation path between phone and receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationPath {
    pub kind: PathKind,
    /// Dimensionless amplitude factor in `(0, 1]`.
    pub base_attenuation: f64,
    /// Applied once per blocker crossing the direct ray.
    #[serde(default = "default_blocked_db")]
    pub blocked_extra_attenuation_db: f64,
}

fn default_blocked_db() -> f64 {
    10.0
}

impl PropagationPath {
    pub fn direct() -> Self {
        Self {
            kind: PathKind::Direct,
            base_attenuation: 1.0,
            blocked_extra_attenuation_db: default_blocked_db(),
        }
    }

    pub fn reflector(point: Point, base_attenuation: f64) -> Self {
        Self {
            kind: PathKind::Reflector { point },
            base_attenuation,
            blocked_extra_attenuation_db: default_blocked_db(),
        }
    }
}

/// An obstacle (person, parked car) modeled as a ground-plane segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blocker {
    pub start: Point,
    pub end: Point,
    /// Multiplier on the path's blocked attenuation (a car blocks more than a person).
    #[serde(default = "one")]
    pub strength: f64,
}

fn one() -> f64 {
    1.0
}

/// Receiver-side gain pattern from the vehicle body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleBody {
    /// Attenuation for rays arriving from behind the array (outside +-90 deg of boresight).
    pub rear_attenuation_db: f64,
    /// Cabin shadowing of an antenna by the dashboard for rays from the far
    /// side, in dB per meter of the antenna's lateral offset, scaled by the
    /// lateral component of the arrival direction.
    pub cabin_shadow_db_per_m: f64,
}

impl Default for VehicleBody {
    fn default() -> Self {
        Self {
            rear_attenuation_db: 6.0,
            cabin_shadow_db_per_m: 40.0,
        }
    }
}

impl VehicleBody {
    pub fn none() -> Self {
        Self {
            rear_attenuation_db: 0.0,
            cabin_shadow_db_per_m: 0.0,
        }
    }

    /// Gain in dB for an antenna at lateral `offset` receiving along `arrival`.
    pub fn element_gain_db(&self, offset: f64, arrival: Point) -> f64 {
        let mut g = 0.0;
        if arrival.x < 0.0 {
            g -= self.rear_attenuation_db;
        }
        let far_side = -offset.signum() * arrival.y;
        if offset != 0.0 && far_side > 0.0 {
            g -= self.cabin_shadow_db_per_m * offset.abs() * far_side;
        }
        g
    }
}

/// Receiver hardware imperfections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Impairments {
    /// Per-antenna, per-subcarrier chain phase offsets in radians
    /// (`[n_ant][n_sub]`; empty means none).
    #[serde(default)]
    pub chain_phase_rad: Vec<Vec<f64>>,
    /// Per-antenna chain gain in dB (empty means unity).
    #[serde(default)]
    pub chain_gain_db: Vec<f64>,
    /// Standard deviation of the per-packet sampling time offset, ns.
    #[serde(default)]
    pub sto_std_ns: f64,
    /// Draw a uniformly random common phase per packet (carrier offset).
    #[serde(default)]
    pub random_common_phase: bool,
}

/// RSS reporting model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssModel {
    /// Calibration constant added to `10 log10(mean |CSI|^2)`.
    pub offset_db: f64,
    /// Gaussian measurement noise, dB.
    #[serde(default)]
    pub noise_db: f64,
    /// Reporting resolution (integer dB on common chipsets); `None` keeps full precision.
    #[serde(default)]
    pub quantum_db: Option<f64>,
}

impl Default for RssModel {
    fn default() -> Self {
        Self {
            offset_db: -26.0,
            noise_db: 0.0,
            quantum_db: Some(1.0),
        }
    }
}

/// Everything needed to generate one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub ride_id: String,
    pub condition: Condition,
    /// Rider (transmitter) position; `y > 0` is left of the vehicle's travel.
    pub rider_pos: Point,
    /// Vehicle speed, m/s.
    pub vehicle_speed: f64,
    /// Vehicle (array centre) x coordinate at `t = 0`.
    pub vehicle_start_x: f64,
    pub duration_s: f64,
    pub antennas: AntennaConfig,
    pub paths: Vec<PropagationPath>,
    pub blockers: Vec<Blocker>,
    pub propagation: Propagation,
    pub body: VehicleBody,
    /// Std of each real/imaginary noise component.
    pub noise_std: f64,
    pub packet_rate_pps: f64,
    /// Uniform timing jitter as a fraction of the packet interval.
    pub timing_jitter: f64,
    pub loss_model: LossModel,
    pub impairments: Impairments,
    pub rss: RssModel,
    /// Feed every antenna the channel seen at the array centre (RF splitter).
    pub splitter: bool,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            ride_id: "sim".into(),
            condition: Condition::OnlyRider,
            rider_pos: Point::new(0.0, -3.5),
            vehicle_speed: 6.7,
            vehicle_start_x: -20.0,
            duration_s: 6.0,
            antennas: AntennaConfig::default(),
            paths: vec![PropagationPath::direct()],
            blockers: Vec::new(),
            propagation: Propagation::default(),
            body: VehicleBody::default(),
            noise_std: 0.002,
            packet_rate_pps: 50.0,
            timing_jitter: 0.2,
            loss_model: LossModel::default(),
            impairments: Impairments::default(),
            rss: RssModel::default(),
            splitter: false,
            seed: 0,
        }
    }
}

impl Scenario {
    /// Ground-truth label implied by the rider's lateral position.
    pub fn side(&self) -> Side {
        Side::from_lateral(self.rider_pos.y)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if let Err(m) = self.antennas.validate() {
            return bad(m);
        }
        if self.paths.is_empty() {
            return bad("at least one propagation path is required".into());
        }
        for (i, p) in self.paths.iter().enumerate() {
            if !(p.base_attenuation > 0.0 && p.base_attenuation <= 1.0) {
                return bad(format!("path {i}: attenuation must lie in (0, 1], got {}", p.base_attenuation));
            }
            if !(p.blocked_extra_attenuation_db >= 0.0) {
                return bad(format!("path {i}: blocked attenuation must be >= 0 dB"));
            }
        }
        if !(self.packet_rate_pps > 0.0 && self.packet_rate_pps.is_finite()) {
            return bad(format!("packet_rate_pps must be > 0, got {}", self.packet_rate_pps));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s must be >= 0, got {}", self.duration_s));
        }
        if !(self.vehicle_speed >= 0.0 && self.vehicle_speed.is_finite()) {
            return bad(format!("vehicle_speed must be >= 0, got {}", self.vehicle_speed));
        }
        if !(self.noise_std >= 0.0) {
            return bad("noise_std must be >= 0".into());
        }
        if !(0.0..0.5).contains(&self.timing_jitter) {
            return bad("timing_jitter must lie in [0, 0.5)".into());
        }
        if !(self.rider_pos.x.is_finite() && self.rider_pos.y.is_finite()) {
            return bad("rider position must be finite".into());
        }
        let n_ant = self.antennas.n_ant;
        let ph = &self.impairments.chain_phase_rad;
        if !ph.is_empty() && (ph.len() != n_ant || ph.iter().any(|r| r.len() != engine::N_SUB)) {
            return bad(format!("chain_phase_rad must be [{n_ant}][{}]", engine::N_SUB));
        }
        let g = &self.impairments.chain_gain_db;
        if !g.is_empty() && g.len() != n_ant {
            return bad(format!("chain_gain_db must have {n_ant} entries"));
        }
        if let Some(q) = self.rss.quantum_db {
            if !(q > 0.0) {
                return bad("rss quantum must be positive".into());
            }
        }
        self.loss_model.validate().or_else(bad)
    }
}
