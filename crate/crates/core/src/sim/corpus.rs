//! Labeled corpus generation: one trace per ride plus a CSV manifest.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::Point;
use super::{simulate, Blocker, Impairments, PropagationPath, RssModel, Scenario, SimError, VehicleBody};
use crate::csi::{save_trace, AntennaConfig, Condition, Side};
use crate::rng;
use crate::sim::loss::LossModel;

/// Randomization ranges and shared settings for a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub packet_rate_pps: f64,
    /// Vehicle speed range, m/s.
    pub speed_range: (f64, f64),
    /// Rider distance from the vehicle's path, m.
    pub lateral_range: (f64, f64),
    /// Distance driven before reaching the rider, m.
    pub approach_range: (f64, f64),
    /// Distance driven after passing the rider, m.
    pub exit_range: (f64, f64),
    /// Number of environmental reflectors (walls, poles, parked vehicles), inclusive.
    pub reflector_count: (usize, usize),
    /// Lateral distance of reflectors from the vehicle's path, m. Each lands on a random side.
    pub reflector_lateral: (f64, f64),
    pub reflector_attenuation: (f64, f64),
    /// Attenuation of people standing next to the rider when acting as scatterers.
    pub bystander_attenuation: (f64, f64),
    pub noise_std: f64,
    pub timing_jitter: f64,
    pub antennas: AntennaConfig,
    pub body: VehicleBody,
    pub loss_model: LossModel,
    pub rss: RssModel,
    /// Per-packet sampling time offset std, ns.
    pub sto_std_ns: f64,
    /// Inject fixed random per-antenna chain phase offsets and a random
    /// common phase per packet.
    pub phase_impairments: bool,
    pub blocked_db: f64,
    pub car_strength: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl CorpusConfig {
    /// Small, fast corpus for CI and desk runs.
    pub fn desk() -> Self {
        Self {
            packet_rate_pps: 50.0,
            speed_range: (4.47, 8.94),
            lateral_range: (2.5, 5.0),
            approach_range: (15.0, 25.0),
            exit_range: (10.0, 20.0),
            reflector_count: (2, 4),
            reflector_lateral: (6.0, 12.0),
            reflector_attenuation: (0.2, 0.5),
            bystander_attenuation: (0.3, 0.6),
            noise_std: 0.002,
            timing_jitter: 0.2,
            antennas: AntennaConfig::default(),
            body: VehicleBody::default(),
            loss_model: LossModel::default(),
            rss: RssModel::default(),
            sto_std_ns: 20.0,
            phase_impairments: true,
            blocked_db: 10.0,
            car_strength: 1.5,
        }
    }

    /// Packet rate and ride lengths comparable to the original captures.
    pub fn paper() -> Self {
        Self {
            packet_rate_pps: 300.0,
            approach_range: (20.0, 30.0),
            exit_range: (15.0, 25.0),
            ..Self::desk()
        }
    }

    pub fn for_profile(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "paper" => Some(Self::paper()),
            _ => None,
        }
    }

    /// Receiver hardware impairments shared by every ride of a corpus.
    pub fn hardware(&self, seed: u64) -> Impairments {
        let mut r = rng::stream(seed, "corpus/hardware");
        let n_ant = self.antennas.n_ant;
        let chain_phase_rad = if self.phase_impairments {
            (0..n_ant)
                .map(|_| {
                    let base: f64 = r.random_range(-PI..PI);
                    // slow ripple across the band
                    let ripple: f64 = r.random_range(0.0..0.2);
                    let p0: f64 = r.random_range(0.0..2.0 * PI);
                    (0..super::engine::N_SUB)
                        .map(|k| super::geometry::wrap_angle(base + ripple * (p0 + k as f64 * 0.2).sin()))
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        Impairments {
            chain_phase_rad,
            chain_gain_db: Vec::new(),
            sto_std_ns: self.sto_std_ns,
            random_common_phase: self.phase_impairments,
        }
    }
}

/// Number of rides per (condition, side) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub cells: Vec<(Condition, Side, usize)>,
}

impl CorpusSpec {
    pub fn uniform(n: usize, conditions: &[Condition]) -> Self {
        let cells = conditions
            .iter()
            .flat_map(|&c| Side::ALL.map(|s| (c, s, n)))
            .collect();
        Self { cells }
    }

    /// The 85-ride layout of the original field study.
    pub fn paper_table() -> Self {
        let counts = [(7, 6), (5, 6), (13, 14), (10, 12), (6, 6)];
        let cells = Condition::ALL
            .iter()
            .zip(counts)
            .flat_map(|(&c, (l, r))| [(c, Side::Left, l), (c, Side::Right, r)])
            .collect();
        Self { cells }
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.2).sum()
    }
}

fn uniform<R: Rng>(r: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        r.random_range(lo..hi)
    } else {
        lo
    }
}

fn person(x: f64, y: f64) -> Blocker {
    Blocker {
        start: Point::new(x - 0.25, y),
        end: Point::new(x + 0.25, y),
        strength: 1.0,
    }
}

/// Scenario for ride number `index` of one cell.
pub fn ride_scenario(cfg: &CorpusConfig, condition: Condition, side: Side, index: usize, seed: u64) -> Scenario {
    let mut r = rng::stream(seed, &format!("corpus/ride/{condition}/{side}/{index}"));
    let sign = match side {
        Side::Left => 1.0,
        Side::Right => -1.0,
    };
    let speed = uniform(&mut r, cfg.speed_range);
    let lateral = uniform(&mut r, cfg.lateral_range);
    let approach = uniform(&mut r, cfg.approach_range);
    let exit = uniform(&mut r, cfg.exit_range);
    let rider = Point::new(0.0, sign * lateral);

    let mut paths = vec![PropagationPath {
        blocked_extra_attenuation_db: cfg.blocked_db,
        ..PropagationPath::direct()
    }];
    let n_refl = if cfg.reflector_count.1 > cfg.reflector_count.0 {
        r.random_range(cfg.reflector_count.0..=cfg.reflector_count.1)
    } else {
        cfg.reflector_count.0
    };
    for _ in 0..n_refl {
        let x = r.random_range(-approach..exit);
        let s = if r.random::<bool>() { 1.0 } else { -1.0 };
        let y = s * uniform(&mut r, cfg.reflector_lateral);
        let a = uniform(&mut r, cfg.reflector_attenuation);
        paths.push(PropagationPath::reflector(Point::new(x, y), a));
    }

    // obstacles sit between the rider and the street
    let mut blockers = Vec::new();
    let gap = |r: &mut rng::StreamRng| sign * (lateral - uniform(r, (0.8, 1.5)));
    let people = match condition {
        Condition::TwoPeopleBlocking => 2,
        Condition::CarsAndPeopleBlocking => 3,
        _ => 0,
    };
    for i in 0..people {
        let x = (i as f64 - (people - 1) as f64 / 2.0) * 0.5 + uniform(&mut r, (-0.2, 0.2));
        let y = gap(&mut r);
        blockers.push(person(x, y));
    }
    if matches!(condition, Condition::TwoCarsBlocking | Condition::CarsAndPeopleBlocking) {
        let y = gap(&mut r);
        let shift = uniform(&mut r, (-1.0, 1.0));
        for centre in [-2.6, 2.6] {
            let x = centre + shift;
            blockers.push(Blocker {
                start: Point::new(x - 2.25, y),
                end: Point::new(x + 2.25, y),
                strength: cfg.car_strength,
            });
        }
    }
    if condition == Condition::PeopleBothSides {
        for dir in [-1.0, 1.0] {
            let x = dir * uniform(&mut r, (0.6, 1.2));
            let y = rider.y + uniform(&mut r, (-0.3, 0.3));
            let a = uniform(&mut r, cfg.bystander_attenuation);
            paths.push(PropagationPath::reflector(Point::new(x, y), a));
        }
    }

    Scenario {
        ride_id: ride_id(condition, side, index),
        condition,
        rider_pos: rider,
        vehicle_speed: speed,
        vehicle_start_x: -approach,
        duration_s: (approach + exit) / speed,
        antennas: cfg.antennas.clone(),
        paths,
        blockers,
        propagation: Default::default(),
        body: cfg.body.clone(),
        noise_std: cfg.noise_std,
        packet_rate_pps: cfg.packet_rate_pps,
        timing_jitter: cfg.timing_jitter,
        loss_model: cfg.loss_model.clone(),
        impairments: cfg.hardware(seed),
        rss: cfg.rss.clone(),
        splitter: false,
        seed: rng::derive_seed(seed, &format!("corpus/sim/{condition}/{side}/{index}")),
    }
}

/// Splitter recording with the corpus hardware, used for phase calibration.
pub fn calibration_scenario(cfg: &CorpusConfig, seed: u64) -> Scenario {
    Scenario {
        ride_id: "calibration".into(),
        rider_pos: Point::new(0.0, 3.0),
        vehicle_speed: 0.0,
        vehicle_start_x: -5.0,
        duration_s: 2.0,
        antennas: cfg.antennas.clone(),
        noise_std: cfg.noise_std,
        packet_rate_pps: cfg.packet_rate_pps,
        loss_model: LossModel::lossless(),
        impairments: cfg.hardware(seed),
        rss: cfg.rss.clone(),
        splitter: true,
        seed: rng::derive_seed(seed, "corpus/sim/calibration"),
        ..Scenario::default()
    }
}

fn ride_id(condition: Condition, side: Side, index: usize) -> String {
    format!("{condition}-{side}-{index:03}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub ride_id: String,
    /// Trace path relative to the manifest's directory.
    pub path: String,
    pub condition: Condition,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn rides(&self) -> Vec<crate::csi::RideRecord> {
        self.rows
            .iter()
            .map(|r| crate::csi::RideRecord {
                ride_id: r.ride_id.clone(),
                condition: r.condition,
                side: r.side,
            })
            .collect()
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &manifest.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<Manifest, SimError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<ManifestRow>, _>>()?;
    Ok(Manifest { rows })
}

/// What `corpus.json` records about a generated corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub seed: u64,
    pub spec: CorpusSpec,
    pub config: CorpusConfig,
    pub calibration: String,
}

/// Simulate every ride of `spec` into `out_dir`.
///
/// Writes `<ride_id>.jsonl` per ride, `calibration.jsonl` (splitter capture
/// with the same receiver impairments), `manifest.csv` and `corpus.json`.
pub fn make_corpus(spec: &CorpusSpec, cfg: &CorpusConfig, seed: u64, out_dir: &Path) -> Result<Manifest, SimError> {
    if spec.cells.iter().any(|c| c.2 == 0) {
        return Err(SimError::InvalidScenario("every cell needs at least one ride".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut manifest = Manifest::default();
    for &(condition, side, n) in &spec.cells {
        for i in 0..n {
            let sc = ride_scenario(cfg, condition, side, i, seed);
            let trace = simulate(&sc)?;
            let file = format!("{}.jsonl", sc.ride_id);
            save_trace(&out_dir.join(&file), &trace)?;
            log::debug!("{}: {} packets", sc.ride_id, trace.packets.len());
            manifest.rows.push(ManifestRow {
                ride_id: sc.ride_id,
                path: file,
                condition,
                side,
            });
        }
    }
    let cal = simulate(&calibration_scenario(cfg, seed))?;
    save_trace(&out_dir.join("calibration.jsonl"), &cal)?;
    write_manifest(&out_dir.join("manifest.csv"), &manifest)?;
    let info = CorpusInfo {
        seed,
        spec: spec.clone(),
        config: cfg.clone(),
        calibration: "calibration.jsonl".into(),
    };
    fs::write(out_dir.join("corpus.json"), serde_json::to_string_pretty(&info)?)?;
    Ok(manifest)
}

/// Resolve a manifest row's trace path.
pub fn trace_path(corpus_dir: &Path, row: &ManifestRow) -> PathBuf {
    corpus_dir.join(&row.path)
}
