//! Packet delivery ratio from 10 to 120 m with and without a person blocking
//! the direct ray, against the loss model's stationary expectation.
//!
//!     cargo run --release --example range_pdr

use rideside::sim::{pdr_curve, RangeConfig};

fn main() -> anyhow::Result<()> {
    let cfg = RangeConfig::default();
    println!("{:>6} {:>5} {:>8} {:>8} {:>8}", "dist", "path", "rss", "pdr", "model");
    for nlos in [false, true] {
        for r in pdr_curve(&cfg, nlos, 7)? {
            println!(
                "{:>6.0} {:>5} {:>8.2} {:>8.4} {:>8.4}",
                r.distance_m,
                if r.nlos { "nlos" } else { "los" },
                r.rss_dbm,
                r.pdr,
                r.expected_pdr
            );
        }
    }
    Ok(())
}
