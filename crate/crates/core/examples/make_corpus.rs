//! Generate a labeled corpus (traces, calibration capture, manifest) and
//! show its ride split.
//!
//!     cargo run --example make_corpus -- [out_dir] [rides_per_cell]

use rideside::csi::{split_dataset, Condition};
use rideside::sim::{make_corpus, CorpusConfig, CorpusSpec};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "corpus".into());
    let n: usize = std::env::args().nth(2).map_or(Ok(4), |s| s.parse())?;
    let spec = CorpusSpec::uniform(n, &Condition::ALL);
    let manifest = make_corpus(&spec, &CorpusConfig::desk(), 7, out.as_ref())?;
    println!("{} rides written to {out}", manifest.rows.len());
    let split = split_dataset(&manifest.rides(), 7);
    for c in &split.cells {
        println!(
            "{:>26} {:>5}: train {} val {} test {}",
            c.condition.as_str(),
            c.side.as_str(),
            c.train.len(),
            c.val.len(),
            c.test.len()
        );
    }
    Ok(())
}
