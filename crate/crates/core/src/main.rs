use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rideside::csi::save_trace;
use rideside::features::{window_mean, FeatureExtractor};
use rideside::pipeline::{
    ablation_configs, run_ablation, run_baselines, run_classic_on_lstm_features, run_lstm, run_subcarrier_sweep,
    run_window_sweep, Dataset, MetricsFile, Part, Profile, RunConfig, RunMetrics, TrainedModel, WINDOW_SIZES_S,
};
use rideside::report;
use rideside::sim::{make_corpus, pdr_curve, simulate, CorpusSpec, RangeConfig, Scenario};

#[derive(Parser)]
#[command(name = "rideside", version, about = "Rider side determination from Wi-Fi CSI")]
struct Cli {
    /// JSON file merged over the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "desk")]
    profile: Profile,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusKind {
    /// Uniform cells of `rides_per_cell` rides (40 rides at desk profile).
    Default,
    /// The 85-ride distribution over conditions and sides.
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    WindowSize,
    Subcarriers,
    Ablation,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled corpus, or one trace from a scenario file.
    Simulate {
        #[arg(long, value_enum, default_value = "default", conflicts_with = "scenario")]
        corpus: CorpusKind,
        /// Scenario JSON; writes a single trace to `--out`.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
    },
    /// Fit the feature pipeline on training rides and dump window-level features.
    Features {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        #[arg(long, default_value = "out/features.csv")]
        out: PathBuf,
    },
    /// Train the LSTM (or run a sweep of trainings).
    Train {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: FeatureFlags,
        #[arg(long, value_enum)]
        sweep: Option<Sweep>,
    },
    /// Score a trained model on the test rides.
    Eval {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        #[arg(long, default_value = "out/model.json")]
        model: PathBuf,
        #[arg(long, default_value = "out/metrics/eval.json")]
        out: PathBuf,
    },
    /// Classic baselines (phase, RSS, amplitude) with kNN, DT and SVM.
    Baseline {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        /// Also feed this model's sequence features to the classic classifiers.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "out/metrics/baseline.json")]
        out: PathBuf,
    },
    /// CSV tables from metrics files, ride time series and the range curve.
    Report {
        #[arg(long, default_value = "out/metrics")]
        metrics: PathBuf,
        /// Corpus for the per-ride time series.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Ride for the time series; defaults to the first test ride.
        #[arg(long)]
        ride: Option<String>,
        #[arg(long, default_value = "out/report")]
        out: PathBuf,
        /// Skip the delivery-ratio simulation.
        #[arg(long)]
        no_pdr: bool,
    },
}

#[derive(clap::Args)]
struct FeatureFlags {
    /// Window length in seconds.
    #[arg(long)]
    window: Option<f64>,
    /// Number of selected subcarriers.
    #[arg(long)]
    n_sub: Option<usize>,
    #[arg(long)]
    no_pdp: bool,
    #[arg(long)]
    no_mp: bool,
}

impl FeatureFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(w) = self.window {
            cfg.window.len_s = w;
        }
        if let Some(n) = self.n_sub {
            cfg.features.n_sub = n;
        }
        if self.no_pdp {
            cfg.features.m_pdp = 0;
        }
        if self.no_mp {
            cfg.features.use_mp = false;
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(cli.profile, p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::for_profile(cli.profile),
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    match cli.command {
        Command::Simulate { corpus, scenario, out } => cmd_simulate(&cfg, corpus, scenario.as_deref(), &out),
        Command::Features { corpus, out } => cmd_features(&cfg, &corpus, &out),
        Command::Train {
            corpus,
            out,
            overrides,
            sweep,
        } => {
            overrides.apply(&mut cfg);
            cfg.validate()?;
            cmd_train(&cfg, &corpus, &out, sweep)
        }
        Command::Eval { corpus, model, out } => cmd_eval(&cfg, &corpus, &model, &out),
        Command::Baseline { corpus, model, out } => cmd_baseline(&cfg, &corpus, model.as_deref(), &out),
        Command::Report {
            metrics,
            corpus,
            ride,
            out,
            no_pdr,
        } => cmd_report(&cfg, &metrics, corpus.as_deref(), ride.as_deref(), &out, no_pdr),
    }
}

fn cmd_simulate(cfg: &RunConfig, kind: CorpusKind, scenario: Option<&Path>, out: &Path) -> Result<()> {
    if let Some(path) = scenario {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut sc: Scenario = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if sc.seed == 0 {
            sc.seed = cfg.seed;
        }
        let trace = simulate(&sc)?;
        let file = if out.extension().is_some_and(|e| e == "jsonl") {
            out.to_path_buf()
        } else {
            fs::create_dir_all(out)?;
            out.join(format!("{}.jsonl", sc.ride_id))
        };
        save_trace(&file, &trace)?;
        log::info!("wrote {} packets to {}", trace.packets.len(), file.display());
        return Ok(());
    }
    let spec = match kind {
        CorpusKind::Default => cfg.corpus_spec(),
        CorpusKind::Paper => CorpusSpec::paper_table(),
    };
    let manifest = make_corpus(&spec, &cfg.corpus, cfg.seed, out)?;
    log::info!("wrote {} rides to {}", manifest.rows.len(), out.display());
    Ok(())
}

fn cmd_features(cfg: &RunConfig, corpus: &Path, out: &Path) -> Result<()> {
    let ds = Dataset::load(corpus, cfg.seed)?;
    let train = ds.windows(Part::Train, &cfg.window);
    let fx = FeatureExtractor::fit(&cfg.features, &train)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(out)?;
    let mut header: Vec<String> = ["ride_id", "split", "condition", "side", "start_time", "n_packets"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..fx.dim()).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for (part, name) in [(Part::Train, "train"), (Part::Val, "val"), (Part::Test, "test")] {
        for win in ds.windows(part, &cfg.window) {
            let mut rec = vec![
                win.ride_id.clone(),
                name.to_string(),
                win.condition.as_str().to_string(),
                win.label.as_str().to_string(),
                win.start_time.to_string(),
                win.len().to_string(),
            ];
            rec.extend(window_mean(&fx.sequence(&win)?).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    let fx_path = out.with_extension("extractor.json");
    fs::write(&fx_path, serde_json::to_string_pretty(&fx)? + "\n")?;
    log::info!("wrote {} and {}", out.display(), fx_path.display());
    Ok(())
}

fn cmd_train(cfg: &RunConfig, corpus: &Path, out: &Path, sweep: Option<Sweep>) -> Result<()> {
    let ds = Dataset::load(corpus, cfg.seed)?;
    let metrics_dir = out.join("metrics");
    let (name, rows, history) = match sweep {
        None => {
            let (model, history, _) = run_lstm(&ds, cfg, "lstm")?;
            model.save(&out.join("model.json"))?;
            // validation-only summary; test rides are scored by `eval`
            let val = ds.windows(Part::Val, &cfg.window);
            let mut row = RunMetrics {
                experiment: "train".into(),
                ..run_row_template(cfg, &history)
            };
            if !val.is_empty() {
                row.metrics = model.evaluate(&val)?;
            }
            ("train", vec![row], Some(history))
        }
        Some(Sweep::WindowSize) => ("sweep_window_size", run_window_sweep(&ds, cfg, &WINDOW_SIZES_S)?, None),
        Some(Sweep::Subcarriers) => {
            let counts: Vec<usize> = (1..=16).collect();
            ("sweep_subcarriers", run_subcarrier_sweep(&ds, cfg, &counts)?, None)
        }
        Some(Sweep::Ablation) => {
            log::info!("ablation over {} feature sets", ablation_configs(&cfg.features).len());
            ("sweep_ablation", run_ablation(&ds, cfg)?, None)
        }
    };
    let mut file = MetricsFile::new("train", cfg, rows);
    file.history = history;
    let path = metrics_dir.join(format!("{name}.json"));
    file.save(&path)?;
    for r in &file.rows {
        println!("{} {} {} window={} n_sub={} accuracy={:.4}", r.experiment, r.classifier, r.features, r.window_s, r.n_sub, r.metrics.accuracy);
    }
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run_row_template(cfg: &RunConfig, history: &rideside::classify::History) -> RunMetrics {
    RunMetrics {
        experiment: String::new(),
        classifier: "lstm".into(),
        features: rideside::pipeline::feature_label(&cfg.features),
        window_s: cfg.window.len_s,
        n_sub: cfg.features.n_sub,
        k: None,
        epochs: Some(history.epochs.len()),
        best_epoch: Some(history.best_epoch),
        val_accuracy: history.epochs.get(history.best_epoch).map(|e| e.val_accuracy),
        metrics: rideside::classify::Metrics {
            accuracy: 0.0,
            n: 0,
            confusion: [[0; 2]; 2],
            per_condition: Default::default(),
        },
    }
}

fn cmd_eval(cfg: &RunConfig, corpus: &Path, model_path: &Path, out: &Path) -> Result<()> {
    if !model_path.exists() {
        bail!("model {} not found (run `train` first)", model_path.display());
    }
    let model = TrainedModel::load(model_path)?;
    if model.fingerprint != cfg.fingerprint() {
        log::warn!("model was trained with a different configuration");
    }
    let ds = Dataset::load(corpus, cfg.seed)?;
    let test = ds.windows(Part::Test, &model.window);
    let metrics = model.evaluate(&test)?;
    let row = RunMetrics {
        experiment: "lstm".into(),
        classifier: "lstm".into(),
        features: rideside::pipeline::feature_label(&model.extractor.config),
        window_s: model.window.len_s,
        n_sub: model.extractor.config.n_sub,
        k: None,
        epochs: None,
        best_epoch: None,
        val_accuracy: None,
        metrics,
    };
    println!("test accuracy {:.4} over {} windows", row.metrics.accuracy, row.metrics.n);
    for (c, t) in &row.metrics.per_condition {
        println!("  {c}: {:.4} ({}/{})", t.accuracy(), t.correct, t.total);
    }
    MetricsFile::new("eval", cfg, vec![row]).save(out)?;
    Ok(())
}

fn cmd_baseline(cfg: &RunConfig, corpus: &Path, model: Option<&Path>, out: &Path) -> Result<()> {
    let ds = Dataset::load(corpus, cfg.seed)?;
    let mut rows = run_baselines(&ds, cfg)?;
    if let Some(p) = model {
        let m = TrainedModel::load(p)?;
        let c = RunConfig {
            window: m.window,
            features: m.extractor.config.clone(),
            ..cfg.clone()
        };
        rows.extend(run_classic_on_lstm_features(&ds, &c, &m.extractor)?);
    }
    for r in &rows {
        let k = r.k.map_or_else(String::new, |k| format!(" (k={k})"));
        println!("{:16} {:4}{k} {:.4}", r.features, r.classifier, r.metrics.accuracy);
    }
    MetricsFile::new("baseline", cfg, rows).save(out)?;
    Ok(())
}

fn cmd_report(
    cfg: &RunConfig,
    metrics_dir: &Path,
    corpus: Option<&Path>,
    ride: Option<&str>,
    out: &Path,
    no_pdr: bool,
) -> Result<()> {
    let metrics = report::collect_metrics(metrics_dir)?;
    let mut written = report::write_tables(&metrics, out)?;
    if let Some(dir) = corpus {
        let ds = Dataset::load(dir, cfg.seed)?;
        let id = match ride {
            Some(r) => r.to_string(),
            None => ds.split.test().first().cloned().context("corpus has no test rides")?,
        };
        let r = ds.ride(&id).with_context(|| format!("ride {id} not in corpus"))?;
        let pair = cfg.features.pair;
        let amp = out.join(format!("amplitude_{id}.csv"));
        report::write_amplitude_series(&r.trace, pair, &amp)?;
        let pdp = out.join(format!("pdp_{id}.csv"));
        report::write_pdp_series(&r.trace, pair, &pdp)?;
        written.extend([amp, pdp]);
    }
    if !no_pdr {
        let range = RangeConfig::default();
        let mut rows = pdr_curve(&range, false, cfg.seed)?;
        rows.extend(pdr_curve(&range, true, cfg.seed)?);
        let path = out.join("pdr.csv");
        report::write_pdr_table(&rows, &path)?;
        written.push(path);
    }
    for p in &written {
        println!("{}", p.display());
    }
    Ok(())
}
