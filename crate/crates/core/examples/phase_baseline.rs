//! Phase-difference baseline: estimate chain offsets from a splitter
//! capture, then compute the four window features for a left and a right ride.
//!
//!     cargo run --example phase_baseline

use rideside::csi::make_windows;
use rideside::phase::{phase_feature, PhaseCalibration, PhaseVariant};
use rideside::sim::{calibration_scenario, ride_scenario, simulate, CorpusConfig};
use rideside::csi::{Condition, Side};

fn main() -> anyhow::Result<()> {
    let cfg = CorpusConfig::desk();
    let cal_trace = simulate(&calibration_scenario(&cfg, 7))?;
    let cal = PhaseCalibration::estimate(&cal_trace.packets, 0).expect("calibration capture has packets");
    println!("antenna C offset on subcarrier 0: {:.3} rad", cal.offsets[2][0]);

    for side in Side::ALL {
        let sc = ride_scenario(&cfg, Condition::OnlyRider, side, 0, 7);
        let trace = simulate(&sc)?;
        let windows = make_windows(&trace.packets, 3.0, 0.4, side, &sc.ride_id, sc.condition);
        let w = &windows[windows.len() / 2];
        println!("{} ride, window at {:.1} s:", side.as_str(), w.start_time);
        for v in PhaseVariant::ALL {
            let f = phase_feature(w, v, 10, (0, 2), &cal);
            let shown: Vec<String> = f.iter().take(6).map(|x| format!("{x:.2}")).collect();
            println!("  ({v:?}) {} values: {}", f.len(), shown.join(" "));
        }
    }
    Ok(())
}
