//! Phase, RSS and amplitude baselines with kNN, decision tree and SVM.
//!
//!     cargo run --release --example classic_baselines -- [corpus_dir]

use rideside::pipeline::{run_baselines, Dataset, Profile, RunConfig};
use rideside::sim::make_corpus;

fn main() -> anyhow::Result<()> {
    let cfg = RunConfig::for_profile(Profile::Desk);
    let dir = std::env::args().nth(1).unwrap_or_else(|| "corpus".into());
    let dir = std::path::Path::new(&dir);
    if !dir.join("manifest.csv").exists() {
        make_corpus(&cfg.corpus_spec(), &cfg.corpus, cfg.seed, dir)?;
    }
    let ds = Dataset::load(dir, cfg.seed)?;
    println!("{:10} {:>8} {:>8} {:>8}", "baseline", "kNN", "DT", "SVM");
    let rows = run_baselines(&ds, &cfg)?;
    for chunk in rows.chunks(3) {
        let k = chunk[0].k.unwrap_or(0);
        println!(
            "{:10} {:>5.1} k={:<2} {:>5.1} {:>8.1}",
            chunk[0].features,
            100.0 * chunk[0].metrics.accuracy,
            k,
            100.0 * chunk[1].metrics.accuracy,
            100.0 * chunk[2].metrics.accuracy
        );
    }
    Ok(())
}
