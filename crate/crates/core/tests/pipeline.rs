use std::collections::BTreeSet;
use std::path::Path;

use rideside::pipeline::{
    run_ablation, run_baselines, run_lstm, run_subcarrier_sweep, run_window_sweep, Dataset, MetricsFile, Part, Profile,
    RunConfig, TrainedModel, WINDOW_SIZES_S,
};
use rideside::sim::make_corpus;

/// Three rides per cell and a very small network so every sweep runs in seconds.
fn tiny(dir: &Path) -> (RunConfig, Dataset) {
    let cfg = RunConfig::with_overrides(
        Profile::Desk,
        Some(serde_json::json!({
            "seed": 11,
            "rides_per_cell": 3,
            "features": {"max_seq_len": 16},
            "train": {"hidden_dim": 3, "n_layers": 1, "max_epochs": 2, "patience": 1},
        })),
    )
    .unwrap();
    make_corpus(&cfg.corpus_spec(), &cfg.corpus, cfg.seed, dir).unwrap();
    let ds = Dataset::load(dir, cfg.seed).unwrap();
    (cfg, ds)
}

#[test]
fn sweeps_emit_one_row_per_setting() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ds) = tiny(dir.path());
    assert_eq!(ds.rides.len(), 30);

    let w = run_window_sweep(&ds, &cfg, &WINDOW_SIZES_S).unwrap();
    let sizes: Vec<f64> = w.iter().map(|r| r.window_s).collect();
    assert_eq!(sizes, WINDOW_SIZES_S);

    let counts: Vec<usize> = (1..=16).collect();
    let s = run_subcarrier_sweep(&ds, &cfg, &counts).unwrap();
    assert_eq!(s.len(), 16);
    assert!(s.iter().zip(&counts).all(|(r, &n)| r.n_sub == n));

    let a = run_ablation(&ds, &cfg).unwrap();
    let labels: Vec<&str> = a.iter().map(|r| r.features.as_str()).collect();
    assert_eq!(labels, ["vbss14", "vbss14+pdp3", "vbss14+mp", "vbss14+pdp3+mp"]);
}

#[test]
fn metrics_cover_conditions_and_test_rides_only() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ds) = tiny(dir.path());
    let (model, history, row) = run_lstm(&ds, &cfg, "lstm").unwrap();
    assert!(history.epochs.len() <= 2);
    assert_eq!(row.metrics.per_condition.len(), 5);
    let total: usize = row.metrics.per_condition.values().map(|t| t.total).sum();
    assert_eq!(total, row.metrics.n);

    let test = ds.windows(Part::Test, &cfg.window);
    assert_eq!(test.len(), row.metrics.n);
    let train_ids: BTreeSet<String> = ds.part_ids(Part::Train).into_iter().collect();
    assert!(test.iter().all(|w| !train_ids.contains(&w.ride_id)));

    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let back = TrainedModel::load(&path).unwrap();
    assert_eq!(back.evaluate(&test).unwrap(), row.metrics);

    let file = MetricsFile::new("train", &cfg, vec![row]);
    let mp = dir.path().join("m.json");
    file.save(&mp).unwrap();
    assert_eq!(MetricsFile::load(&mp).unwrap(), file);
}

#[test]
fn baselines_cover_every_feature_and_classifier() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ds) = tiny(dir.path());
    let rows = run_baselines(&ds, &cfg).unwrap();
    assert_eq!(rows.len(), 27);
    for r in &rows {
        assert!((0.0..=1.0).contains(&r.metrics.accuracy));
        assert_eq!(r.k.is_some(), r.classifier == "knn");
    }
}

#[test]
fn missing_corpus_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(Dataset::load(&dir.path().join("absent"), 1).is_err());
}
