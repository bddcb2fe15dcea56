//! Core CSI domain types shared by the simulator, feature bank and classifiers.

mod split;
mod trace;
mod window;

pub use split::{split_dataset, CellSplit, DatasetSplit, RideRecord};
pub use trace::{load_trace, load_trace_file, TRACE_VERSION, read_trace, save_trace, write_trace, Trace, TraceError, TraceHeader};
pub use window::{make_windows, Window};

use serde::{Deserialize, Serialize};

/// One complex channel estimate.
pub type ComplexSample = num_complex::Complex64;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// OFDM subcarrier spacing in Hz.
pub const SUBCARRIER_SPACING_HZ: f64 = 312.5e3;

/// Default carrier frequency (5 GHz band, channel 36/40 bonded centre).
pub const DEFAULT_CARRIER_HZ: f64 = 5.19e9;

/// Default spacing between the two antennas used for classification.
pub const DEFAULT_SPACING_M: f64 = 0.052;

/// Subcarrier indices reported for a 40 MHz channel with grouping 4.
pub const GROUPING4_40MHZ: [i32; 30] = [
    -58, -54, -50, -46, -42, -38, -34, -30, -26, -22, -18, -14, -10, -6, -2, 2, 6, 10, 14, 18,
    22, 26, 30, 34, 38, 42, 46, 50, 54, 58,
];

/// Which side of the street the rider is waiting on, relative to the
/// direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::Left, Side::Right];

    /// Class index used by the classifiers (left = 0, right = 1).
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn from_index(i: usize) -> Side {
        if i == 0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Side implied by the lateral coordinate of a point (vehicle travels
    /// along +x, so +y is on its left).
    pub fn from_lateral(y: f64) -> Side {
        if y >= 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

/// The five blocking conditions a ride can be recorded under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Rider standing alone.
    OnlyRider,
    /// People standing on both sides of the rider, no cars.
    PeopleBothSides,
    /// Two people standing between rider and street.
    TwoPeopleBlocking,
    /// Two parked cars between rider and street.
    TwoCarsBlocking,
    /// Two parked cars and three people between rider and street.
    CarsAndPeopleBlocking,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::OnlyRider,
        Condition::PeopleBothSides,
        Condition::TwoPeopleBlocking,
        Condition::TwoCarsBlocking,
        Condition::CarsAndPeopleBlocking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::OnlyRider => "only_rider",
            Condition::PeopleBothSides => "people_both_sides",
            Condition::TwoPeopleBlocking => "two_people_blocking",
            Condition::TwoCarsBlocking => "two_cars_blocking",
            Condition::CarsAndPeopleBlocking => "cars_and_people_blocking",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown condition `{s}`"))
    }
}

/// Receive antenna array description.
///
/// Antennas are laid out left to right along the dashboard with a uniform
/// pitch; `spacing_m` is the distance between the two antennas in
/// `used_pair` (left index first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaConfig {
    pub n_ant: usize,
    pub spacing_m: f64,
    pub used_pair: (usize, usize),
    pub carrier_freq_hz: f64,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self {
            n_ant: 3,
            spacing_m: DEFAULT_SPACING_M,
            used_pair: (0, 2),
            carrier_freq_hz: DEFAULT_CARRIER_HZ,
        }
    }
}

impl AntennaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(format!("antenna spacing must be > 0, got {}", self.spacing_m));
        }
        if !(2..=3).contains(&self.n_ant) {
            return Err(format!("n_ant must be 2 or 3, got {}", self.n_ant));
        }
        let (l, r) = self.used_pair;
        if l >= r || r >= self.n_ant {
            return Err(format!("invalid antenna pair ({l}, {r}) for {} antennas", self.n_ant));
        }
        if !(self.carrier_freq_hz > 0.0) {
            return Err("carrier frequency must be positive".into());
        }
        Ok(())
    }

    /// Distance between adjacent array elements.
    pub fn pitch_m(&self) -> f64 {
        self.spacing_m / (self.used_pair.1 - self.used_pair.0) as f64
    }

    /// Lateral offset (+y = left) of antenna `i` from the array centre.
    pub fn lateral_offset(&self, i: usize) -> f64 {
        ((self.n_ant as f64 - 1.0) / 2.0 - i as f64) * self.pitch_m()
    }
}

/// One received Wi-Fi frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiPacket {
    /// Receive time in seconds.
    pub timestamp: f64,
    pub seq: u64,
    /// Per-antenna received signal strength (vendor-relative dBm).
    pub rss: Vec<f64>,
    /// `csi[antenna][subcarrier]`
    pub csi: Vec<Vec<ComplexSample>>,
}

impl CsiPacket {
    pub fn n_ant(&self) -> usize {
        self.csi.len()
    }

    pub fn n_sub(&self) -> usize {
        self.csi.first().map_or(0, Vec::len)
    }

    pub fn amplitudes(&self, antenna: usize) -> Vec<f64> {
        self.csi[antenna].iter().map(|c| c.norm()).collect()
    }

    pub fn phases(&self, antenna: usize) -> Vec<f64> {
        self.csi[antenna].iter().map(|c| c.arg()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.timestamp.is_finite()
            && self.rss.iter().all(|r| r.is_finite())
            && self
                .csi
                .iter()
                .flatten()
                .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
