//! Accuracy against window length or number of selected subcarriers.
//!
//!     cargo run --release --example sweeps -- window|subcarriers [corpus_dir]

use rideside::pipeline::{run_subcarrier_sweep, run_window_sweep, Dataset, Profile, RunConfig, WINDOW_SIZES_S};
use rideside::sim::make_corpus;

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let which = std::env::args().nth(1).unwrap_or_else(|| "window".into());
    let dir = std::env::args().nth(2).unwrap_or_else(|| "corpus".into());
    let dir = std::path::Path::new(&dir);
    let cfg = RunConfig::for_profile(Profile::Desk);
    if !dir.join("manifest.csv").exists() {
        make_corpus(&cfg.corpus_spec(), &cfg.corpus, cfg.seed, dir)?;
    }
    let ds = Dataset::load(dir, cfg.seed)?;
    let rows = match which.as_str() {
        "window" => run_window_sweep(&ds, &cfg, &WINDOW_SIZES_S)?,
        "subcarriers" => run_subcarrier_sweep(&ds, &cfg, &(1..=16).collect::<Vec<_>>())?,
        other => anyhow::bail!("unknown sweep {other}"),
    };
    for r in rows {
        println!("window {:.1} s, {:2} subcarriers: {:.4}", r.window_s, r.n_sub, r.metrics.accuracy);
    }
    Ok(())
}
