//! Train the sequence classifier on a freshly simulated desk corpus and
//! score it on the held-out rides.
//!
//!     cargo run --release --example train_lstm -- [corpus_dir]

use rideside::pipeline::{run_lstm, Dataset, Profile, RunConfig};
use rideside::sim::make_corpus;

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cfg = RunConfig::for_profile(Profile::Desk);
    let dir = std::env::args().nth(1).unwrap_or_else(|| "corpus".into());
    let dir = std::path::Path::new(&dir);
    if !dir.join("manifest.csv").exists() {
        make_corpus(&cfg.corpus_spec(), &cfg.corpus, cfg.seed, dir)?;
    }
    let ds = Dataset::load(dir, cfg.seed)?;
    let (model, history, row) = run_lstm(&ds, &cfg, "lstm")?;
    println!(
        "{} epochs (best {}), input dim {}, sequence length {}",
        history.epochs.len(),
        history.best_epoch,
        model.extractor.dim(),
        model.extractor.seq_len
    );
    println!("test accuracy {:.4} over {} windows", row.metrics.accuracy, row.metrics.n);
    for (c, t) in &row.metrics.per_condition {
        println!("  {c:>26}: {:.3}", t.accuracy());
    }
    Ok(())
}
