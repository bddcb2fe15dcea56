use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::geometry::{blocking_db, db_to_amplitude, delayed, path_amplitude, path_geometry, Point};
use super::loss::LossProcess;
use super::{PathKind, Scenario, SimError};
use crate::csi::{ComplexSample, CsiPacket, Trace, TraceHeader, GROUPING4_40MHZ, SUBCARRIER_SPACING_HZ};
use crate::rng;

pub(crate) const N_SUB: usize = GROUPING4_40MHZ.len();

/// Absolute frequency of each reported subcarrier.
pub fn subcarrier_frequencies(carrier_hz: f64) -> [f64; N_SUB] {
    GROUPING4_40MHZ.map(|k| carrier_hz + k as f64 * SUBCARRIER_SPACING_HZ)
}

/// Noise-free channel of every antenna at one vehicle position.
fn clean_channel(sc: &Scenario, freqs: &[f64; N_SUB], centre: Point) -> Vec<Vec<ComplexSample>> {
    let ant = &sc.antennas;
    (0..ant.n_ant)
        .map(|a| {
            let offset = ant.lateral_offset(a);
            let rx = if sc.splitter {
                centre
            } else {
                Point::new(centre.x, centre.y + offset)
            };
            let mut row = vec![ComplexSample::new(0.0, 0.0); N_SUB];
            for path in &sc.paths {
                let geom = path_geometry(path, sc.rider_pos, rx, &sc.blockers);
                if geom.length <= 0.0 {
                    continue;
                }
                let gain_db = if sc.splitter {
                    0.0
                } else {
                    sc.body.element_gain_db(offset, geom.arrival)
                };
                let amp = path_amplitude(path, &geom, &sc.propagation) * db_to_amplitude(gain_db);
                for (h, &f) in row.iter_mut().zip(freqs) {
                    *h += delayed(amp, geom.length, f);
                }
            }
            row
        })
        .collect()
}

fn mean_power_db(row: &[ComplexSample]) -> f64 {
    let p = row.iter().map(|c| c.norm_sqr()).sum::<f64>() / row.len() as f64;
    10.0 * p.max(1e-30).log10()
}

/// Whether the direct ray from the rider to the array centre is blocked.
fn direct_blocked(sc: &Scenario, centre: Point) -> bool {
    sc.paths
        .iter()
        .filter(|p| matches!(p.kind, PathKind::Direct))
        .any(|p| blocking_db(sc.rider_pos, centre, &sc.blockers, p.blocked_extra_attenuation_db.max(1e-9)) > 0.0)
}

fn link_rss(sc: &Scenario, csi: &[Vec<ComplexSample>]) -> f64 {
    csi.iter().map(|r| mean_power_db(r)).sum::<f64>() / csi.len() as f64 + sc.rss.offset_db
}

/// Noise-free mean RSS (dBm) and direct-ray blockage at vehicle position
/// `centre`: the state that drives packet loss.
pub fn link_state(sc: &Scenario, centre: Point) -> (f64, bool) {
    let freqs = subcarrier_frequencies(sc.antennas.carrier_freq_hz);
    (link_rss(sc, &clean_channel(sc, &freqs, centre)), direct_blocked(sc, centre))
}

/// Generate the trace described by `sc`.
///
/// Deterministic for a fixed `sc.seed`: loss decisions, noise, timing and
/// impairments each draw from their own named stream.
pub fn simulate(sc: &Scenario) -> Result<Trace, SimError> {
    sc.validate()?;
    let freqs = subcarrier_frequencies(sc.antennas.carrier_freq_hz);
    let n_ant = sc.antennas.n_ant;
    let n_packets = (sc.duration_s * sc.packet_rate_pps).floor() as u64;
    let interval = 1.0 / sc.packet_rate_pps;

    let mut timing_rng = rng::stream(sc.seed, "sim/timing");
    let mut loss_rng = rng::stream(sc.seed, "sim/loss");
    let mut noise_rng = rng::stream(sc.seed, "sim/noise");
    let mut imp_rng = rng::stream(sc.seed, "sim/impairments");
    let noise = (sc.noise_std > 0.0).then(|| Normal::new(0.0, sc.noise_std).expect("finite std"));
    let rss_noise = (sc.rss.noise_db > 0.0).then(|| Normal::new(0.0, sc.rss.noise_db).expect("finite std"));
    let sto = (sc.impairments.sto_std_ns > 0.0).then(|| Normal::new(0.0, sc.impairments.sto_std_ns).expect("finite std"));

    let chain_gain: Vec<f64> = (0..n_ant)
        .map(|a| sc.impairments.chain_gain_db.get(a).map_or(1.0, |&g| db_to_amplitude(g)))
        .collect();

    let mut loss = LossProcess::new(sc.loss_model.clone());
    let mut packets = Vec::new();
    for i in 0..n_packets {
        let jitter = if sc.timing_jitter > 0.0 {
            timing_rng.random_range(-sc.timing_jitter..sc.timing_jitter)
        } else {
            0.0
        };
        let t_exact = (i as f64 + jitter) * interval;
        let t_exact = t_exact.max(0.0);
        let timestamp = (t_exact * 1000.0).round() / 1000.0;
        let centre = Point::new(sc.vehicle_start_x + sc.vehicle_speed * t_exact, 0.0);

        let mut csi = clean_channel(sc, &freqs, centre);
        let clean_rss = link_rss(sc, &csi);
        let nlos = direct_blocked(sc, centre);
        if !loss.deliver(&mut loss_rng, clean_rss, nlos) {
            continue;
        }

        let common = if sc.impairments.random_common_phase {
            imp_rng.random_range(-PI..PI)
        } else {
            0.0
        };
        let sto_s = sto.map_or(0.0, |d| d.sample(&mut imp_rng) * 1e-9);
        for (a, row) in csi.iter_mut().enumerate() {
            let chain_phase = sc.impairments.chain_phase_rad.get(a);
            for (k, h) in row.iter_mut().enumerate() {
                let ramp = -2.0 * PI * GROUPING4_40MHZ[k] as f64 * SUBCARRIER_SPACING_HZ * sto_s;
                let phase = common + ramp + chain_phase.map_or(0.0, |r| r[k]);
                *h *= ComplexSample::from_polar(chain_gain[a], phase);
                if let Some(n) = &noise {
                    *h += ComplexSample::new(n.sample(&mut noise_rng), n.sample(&mut noise_rng));
                }
            }
        }
        let rss = csi
            .iter()
            .map(|row| {
                let mut r = mean_power_db(row) + sc.rss.offset_db;
                if let Some(n) = &rss_noise {
                    r += n.sample(&mut noise_rng);
                }
                match sc.rss.quantum_db {
                    Some(q) => (r / q).round() * q,
                    None => r,
                }
            })
            .collect();
        packets.push(CsiPacket {
            timestamp,
            seq: i,
            rss,
            csi,
        });
    }

    let header = TraceHeader {
        version: crate::csi::TRACE_VERSION,
        n_ant,
        n_sub: N_SUB,
        carrier_freq_hz: sc.antennas.carrier_freq_hz,
        antenna_spacing_m: sc.antennas.spacing_m,
        ride_id: sc.ride_id.clone(),
        condition: sc.condition,
        side: sc.side(),
    };
    Ok(Trace { header, packets })
}
