//! Simulate one drive-by and print how the amplitude difference tracks the
//! rider's side as the vehicle passes.
//!
//!     cargo run --example simulate_ride -- [left|right] [out.jsonl]

use rideside::csi::{save_trace, Side};
use rideside::features::amplitude_difference;
use rideside::sim::{simulate, Point, Scenario};

fn main() -> anyhow::Result<()> {
    let side = std::env::args().nth(1).unwrap_or_else(|| "right".into());
    let y = match side.as_str() {
        "left" => 3.5,
        "right" => -3.5,
        other => anyhow::bail!("side must be left or right, got {other}"),
    };
    let sc = Scenario {
        ride_id: format!("demo-{side}"),
        rider_pos: Point::new(0.0, y),
        ..Scenario::default()
    };
    let trace = simulate(&sc)?;
    println!(
        "{}: {} packets over {:.1} s, label {:?}",
        trace.header.ride_id,
        trace.packets.len(),
        sc.duration_s,
        trace.header.side
    );
    println!("{:>6} {:>8} {:>12}", "t", "x", "mean C-A");
    for p in trace.packets.iter().step_by(25) {
        let d = amplitude_difference(p, (0, 2));
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let x = sc.vehicle_start_x + sc.vehicle_speed * p.timestamp;
        println!("{:6.2} {:8.2} {:12.5}", p.timestamp, x, mean);
    }
    if let Some(out) = std::env::args().nth(2) {
        save_trace(&out, &trace)?;
        println!("saved {out}");
    }
    assert_eq!(trace.header.side, if y > 0.0 { Side::Left } else { Side::Right });
    Ok(())
}
