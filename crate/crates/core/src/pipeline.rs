//! End-to-end runs over a corpus directory: loading and splitting rides,
//! windowing, LSTM training and evaluation, classic baselines and sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classify::{
    evaluate, train, ClassifyError, DecisionTree, History, Knn, LinearSvm, LstmModel, Metrics, Standardizer, SvmConfig,
    TrainConfig,
};
use crate::csi::{make_windows, split_dataset, DatasetSplit, RideRecord, Trace, TraceError, Window};
use crate::features::{window_mean, FeatureConfig, FeatureError, FeatureExtractor, FeatureSequence, Selection};
use crate::phase::{phase_feature, PhaseCalibration, PhaseVariant};
use crate::sim::{load_manifest, trace_path, CorpusConfig, CorpusSpec, SimError};

pub const METRICS_VERSION: u32 = 1;
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    Missing(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(format!("unknown profile `{other}` (expected desk or paper)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub len_s: f64,
    pub stride_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { len_s: 3.0, stride_s: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicConfig {
    /// Odd k values from `k_min` to `k_max` are tried; the best on validation wins.
    pub k_min: usize,
    pub k_max: usize,
    pub tree_depth: usize,
    pub svm: SvmConfig,
    pub n_subwindows: usize,
}

impl Default for ClassicConfig {
    fn default() -> Self {
        Self {
            k_min: 3,
            k_max: 15,
            tree_depth: 8,
            svm: SvmConfig::default(),
            n_subwindows: 10,
        }
    }
}

/// Everything a run depends on besides the corpus itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub profile: Profile,
    pub seed: u64,
    /// Rides per (condition, side) cell; `None` uses the 85-ride table.
    pub rides_per_cell: Option<usize>,
    pub corpus: CorpusConfig,
    pub window: WindowConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub classic: ClassicConfig,
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self {
                profile,
                seed: 7,
                rides_per_cell: Some(4),
                corpus: CorpusConfig::desk(),
                window: WindowConfig::default(),
                features: FeatureConfig::default(),
                train: TrainConfig::desk(),
                classic: ClassicConfig::default(),
            },
            Profile::Paper => Self {
                profile,
                seed: 7,
                rides_per_cell: None,
                corpus: CorpusConfig::paper(),
                window: WindowConfig::default(),
                features: FeatureConfig {
                    max_seq_len: None,
                    ..FeatureConfig::default()
                },
                train: TrainConfig::paper(),
                classic: ClassicConfig::default(),
            },
        }
    }

    /// Profile defaults with a partial JSON document merged on top.
    pub fn with_overrides(profile: Profile, overrides: Option<serde_json::Value>) -> Result<Self> {
        let mut base = serde_json::to_value(Self::for_profile(profile))?;
        if let Some(o) = overrides {
            merge_json(&mut base, o);
        }
        let mut cfg: Self = serde_json::from_value(base)?;
        cfg.profile = profile;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(profile: Profile, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::with_overrides(profile, Some(serde_json::from_str(&text)?))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.window;
        if !(w.len_s > 0.0 && w.stride_s > 0.0) {
            return Err(PipelineError::Config("window len_s and stride_s must be positive".into()));
        }
        if self.classic.k_min == 0 || self.classic.k_min > self.classic.k_max {
            return Err(PipelineError::Config("need 1 <= k_min <= k_max".into()));
        }
        self.train.validate()?;
        self.features.validate(30)?;
        Ok(())
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        match self.rides_per_cell {
            Some(n) => CorpusSpec::uniform(n, &crate::csi::Condition::ALL),
            None => CorpusSpec::paper_table(),
        }
    }

    /// Training config with the run seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn merge_json(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[derive(Debug, Clone)]
pub struct Ride {
    pub record: RideRecord,
    pub trace: Trace,
}

/// A loaded corpus with its ride split and phase calibration capture.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rides: Vec<Ride>,
    pub split: DatasetSplit,
    pub calibration: Option<Trace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Train,
    Val,
    Test,
}

/// Windows of each split part.
#[derive(Debug, Clone)]
pub struct SplitWindows {
    pub train: Vec<Window>,
    pub val: Vec<Window>,
    pub test: Vec<Window>,
}

impl Dataset {
    pub fn load(corpus_dir: &Path, seed: u64) -> Result<Self> {
        let manifest_path = corpus_dir.join("manifest.csv");
        if !manifest_path.exists() {
            return Err(PipelineError::Missing(format!("{} (run `simulate` first)", manifest_path.display())));
        }
        let manifest = load_manifest(&manifest_path)?;
        let mut rides = Vec::with_capacity(manifest.rows.len());
        for (row, record) in manifest.rows.iter().zip(manifest.rides()) {
            let trace = crate::csi::load_trace_file(trace_path(corpus_dir, row))?;
            rides.push(Ride { record, trace });
        }
        let cal_path = corpus_dir.join("calibration.jsonl");
        let calibration = if cal_path.exists() {
            Some(crate::csi::load_trace_file(&cal_path)?)
        } else {
            log::warn!("no calibration capture in {}; phase baselines run uncalibrated", corpus_dir.display());
            None
        };
        let records: Vec<RideRecord> = rides.iter().map(|r| r.record.clone()).collect();
        let split = split_dataset(&records, seed);
        Ok(Self {
            rides,
            split,
            calibration,
        })
    }

    pub fn ride(&self, ride_id: &str) -> Option<&Ride> {
        self.rides.iter().find(|r| r.record.ride_id == ride_id)
    }

    pub fn part_ids(&self, part: Part) -> Vec<String> {
        match part {
            Part::Train => self.split.train(),
            Part::Val => self.split.val(),
            Part::Test => self.split.test(),
        }
    }

    pub fn windows(&self, part: Part, w: &WindowConfig) -> Vec<Window> {
        let ids = self.part_ids(part);
        self.rides
            .iter()
            .filter(|r| ids.contains(&r.record.ride_id))
            .flat_map(|r| {
                make_windows(
                    &r.trace.packets,
                    w.len_s,
                    w.stride_s,
                    r.record.side,
                    &r.record.ride_id,
                    r.record.condition,
                )
            })
            .collect()
    }

    pub fn split_windows(&self, w: &WindowConfig) -> SplitWindows {
        SplitWindows {
            train: self.windows(Part::Train, w),
            val: self.windows(Part::Val, w),
            test: self.windows(Part::Test, w),
        }
    }

    pub fn phase_calibration(&self, reference: usize) -> PhaseCalibration {
        self.calibration
            .as_ref()
            .and_then(|t| PhaseCalibration::estimate(&t.packets, reference))
            .unwrap_or_else(|| {
                let (n_ant, n_sub) = self
                    .rides
                    .iter()
                    .flat_map(|r| r.trace.packets.first())
                    .map(|p| (p.n_ant(), p.n_sub()))
                    .next()
                    .unwrap_or((3, 30));
                PhaseCalibration::identity(n_ant, n_sub)
            })
    }
}

/// Fitted features plus network: everything inference needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub fingerprint: String,
    pub window: WindowConfig,
    pub extractor: FeatureExtractor,
    pub model: LstmModel,
}

impl TrainedModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let m: Self = serde_json::from_str(&text)?;
        if m.version != MODEL_VERSION {
            return Err(PipelineError::Config(format!(
                "model version {} unsupported (expected {MODEL_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn predict(&self, window: &Window) -> Result<usize> {
        Ok(self.model.predict(&self.extractor.sequence(window)?)?)
    }

    pub fn evaluate(&self, windows: &[Window]) -> Result<Metrics> {
        let seqs = sequences(&self.extractor, windows)?;
        predict_metrics(&self.model, &seqs, windows)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn sequences(fx: &FeatureExtractor, windows: &[Window]) -> Result<Vec<FeatureSequence>> {
    Ok(windows.iter().map(|w| fx.sequence(w)).collect::<std::result::Result<_, _>>()?)
}

fn labels(windows: &[Window]) -> Vec<usize> {
    windows.iter().map(|w| w.label.index()).collect()
}

fn conditions(windows: &[Window]) -> Vec<String> {
    windows.iter().map(|w| w.condition.as_str().to_string()).collect()
}

fn predict_metrics(model: &LstmModel, seqs: &[FeatureSequence], windows: &[Window]) -> Result<Metrics> {
    let pred = seqs.iter().map(|s| model.predict(s)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(evaluate(&pred, &labels(windows), &conditions(windows))?)
}

/// Fit features on the training windows and train the LSTM, returning the
/// fitted extractor, the best checkpoint and its history.
pub fn fit_lstm(
    windows: &SplitWindows,
    features: &FeatureConfig,
    train_cfg: &TrainConfig,
) -> Result<(FeatureExtractor, LstmModel, History)> {
    if windows.train.is_empty() {
        return Err(PipelineError::Missing("training windows".into()));
    }
    let fx = FeatureExtractor::fit(features, &windows.train)?;
    let tr = sequences(&fx, &windows.train)?;
    let va = sequences(&fx, &windows.val)?;
    let ytr = labels(&windows.train);
    let yva = labels(&windows.val);
    let tr_ex: Vec<_> = tr.iter().zip(ytr).collect();
    let va_ex: Vec<_> = va.iter().zip(yva).collect();
    log::info!(
        "training on {} windows (val {}), seq_len {}, dim {}",
        tr_ex.len(),
        va_ex.len(),
        fx.seq_len,
        fx.dim()
    );
    let (model, history) = train(fx.dim(), &tr_ex, &va_ex, train_cfg)?;
    Ok((fx, model, history))
}

/// Which features a metrics row was computed from.
pub fn feature_label(f: &FeatureConfig) -> String {
    let mut s = match f.selection {
        Selection::Vbss => format!("vbss{}", f.n_sub),
        Selection::First => format!("first{}", f.n_sub),
        Selection::All => "all30".to_string(),
    };
    if f.m_pdp > 0 {
        s.push_str(&format!("+pdp{}", f.m_pdp));
    }
    if f.use_mp {
        s.push_str("+mp");
    }
    s
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Experiment family: `lstm`, `ablation`, `window_size`, `subcarriers`, `baseline`.
    pub experiment: String,
    /// `lstm`, `knn`, `dt` or `svm`.
    pub classifier: String,
    /// Feature set, e.g. `vbss14+pdp3+mp`, `phase_1a`, `rss_2`, `amp_3c`.
    pub features: String,
    pub window_s: f64,
    pub n_sub: usize,
    /// Chosen k for kNN rows.
    pub k: Option<usize>,
    /// Epochs run and best epoch for LSTM rows.
    pub epochs: Option<usize>,
    pub best_epoch: Option<usize>,
    pub val_accuracy: Option<f64>,
    #[serde(flatten)]
    pub metrics: Metrics,
}

/// Run-time details kept apart so the rest of a metrics file is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsMetadata {
    pub generated_unix_s: u64,
    pub tool_version: String,
}

impl MetricsMetadata {
    pub fn now() -> Self {
        Self {
            generated_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema_version: u32,
    pub command: String,
    pub profile: Profile,
    pub seed: u64,
    pub config_fingerprint: String,
    pub rows: Vec<RunMetrics>,
    #[serde(default)]
    pub history: Option<History>,
    pub metadata: MetricsMetadata,
}

impl MetricsFile {
    pub fn new(command: &str, cfg: &RunConfig, rows: Vec<RunMetrics>) -> Self {
        Self {
            schema_version: METRICS_VERSION,
            command: command.to_string(),
            profile: cfg.profile,
            seed: cfg.seed,
            config_fingerprint: cfg.fingerprint(),
            rows,
            history: None,
            metadata: MetricsMetadata::now(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let m: Self = serde_json::from_str(&text)?;
        if m.schema_version != METRICS_VERSION {
            return Err(PipelineError::Config(format!(
                "{}: metrics schema {} unsupported",
                path.display(),
                m.schema_version
            )));
        }
        Ok(m)
    }
}

/// Train the LSTM on one window configuration and score it on the test rides.
pub fn run_lstm(
    ds: &Dataset,
    cfg: &RunConfig,
    experiment: &str,
) -> Result<(TrainedModel, History, RunMetrics)> {
    let windows = ds.split_windows(&cfg.window);
    let (extractor, model, history) = fit_lstm(&windows, &cfg.features, &cfg.train_config())?;
    let trained = TrainedModel {
        version: MODEL_VERSION,
        fingerprint: cfg.fingerprint(),
        window: cfg.window,
        extractor,
        model,
    };
    let metrics = trained.evaluate(&windows.test)?;
    let val_accuracy = history.epochs.get(history.best_epoch).map(|e| e.val_accuracy);
    let row = RunMetrics {
        experiment: experiment.to_string(),
        classifier: "lstm".into(),
        features: feature_label(&cfg.features),
        window_s: cfg.window.len_s,
        n_sub: cfg.features.n_sub,
        k: None,
        epochs: Some(history.epochs.len()),
        best_epoch: Some(history.best_epoch),
        val_accuracy,
        metrics,
    };
    Ok((trained, history, row))
}

/// Window-level feature rows for the classic classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicFeature {
    Phase(PhaseVariant),
    /// Mean RSS difference (C - A).
    Rss,
    /// Mean amplitude difference over all subcarriers (a, c) or the first (b, d);
    /// c and d append the mean RSS difference.
    Amplitude(AmpVariant),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmpVariant {
    A,
    B,
    C,
    D,
}

impl ClassicFeature {
    pub const BASELINES: [ClassicFeature; 9] = [
        ClassicFeature::Phase(PhaseVariant::A),
        ClassicFeature::Phase(PhaseVariant::B),
        ClassicFeature::Phase(PhaseVariant::C),
        ClassicFeature::Phase(PhaseVariant::D),
        ClassicFeature::Rss,
        ClassicFeature::Amplitude(AmpVariant::A),
        ClassicFeature::Amplitude(AmpVariant::B),
        ClassicFeature::Amplitude(AmpVariant::C),
        ClassicFeature::Amplitude(AmpVariant::D),
    ];

    pub fn label(self) -> String {
        match self {
            ClassicFeature::Phase(v) => format!("phase_1{}", format!("{v:?}").to_lowercase()),
            ClassicFeature::Rss => "rss_2".into(),
            ClassicFeature::Amplitude(v) => format!("amp_3{}", format!("{v:?}").to_lowercase()),
        }
    }

    /// Family name used for the baseline ordering: `phase`, `rss` or `amplitude`.
    pub fn family(self) -> &'static str {
        match self {
            ClassicFeature::Phase(_) => "phase",
            ClassicFeature::Rss => "rss",
            ClassicFeature::Amplitude(_) => "amplitude",
        }
    }
}

fn mean_rss_difference(w: &Window, pair: (usize, usize)) -> f64 {
    w.packets.iter().map(|p| p.rss[pair.1] - p.rss[pair.0]).sum::<f64>() / w.packets.len().max(1) as f64
}

fn mean_amp_difference(w: &Window, pair: (usize, usize), first_only: bool) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for p in &w.packets {
        let d = crate::features::amplitude_difference(p, pair);
        let d = if first_only { &d[..1] } else { &d[..] };
        s += d.iter().sum::<f64>();
        n += d.len();
    }
    s / n.max(1) as f64
}

/// Feature row of one window.
pub fn classic_row(
    w: &Window,
    feature: ClassicFeature,
    pair: (usize, usize),
    cal: &PhaseCalibration,
    n_subwindows: usize,
) -> Vec<f64> {
    match feature {
        ClassicFeature::Phase(v) => phase_feature(w, v, n_subwindows, pair, cal),
        ClassicFeature::Rss => vec![mean_rss_difference(w, pair)],
        ClassicFeature::Amplitude(v) => {
            let first = matches!(v, AmpVariant::B | AmpVariant::D);
            let mut row = vec![mean_amp_difference(w, pair, first)];
            if matches!(v, AmpVariant::C | AmpVariant::D) {
                row.push(mean_rss_difference(w, pair));
            }
            row
        }
    }
}

/// Labeled rows of each split part.
#[derive(Debug, Clone)]
pub struct ClassicData {
    pub train: Vec<Vec<f64>>,
    pub val: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
    pub y_train: Vec<usize>,
    pub y_val: Vec<usize>,
    pub y_test: Vec<usize>,
    pub test_conditions: Vec<String>,
}

impl ClassicData {
    pub fn from_rows(windows: &SplitWindows, mut row: impl FnMut(&Window) -> Vec<f64>) -> Self {
        Self {
            train: windows.train.iter().map(&mut row).collect(),
            val: windows.val.iter().map(&mut row).collect(),
            test: windows.test.iter().map(&mut row).collect(),
            y_train: labels(&windows.train),
            y_val: labels(&windows.val),
            y_test: labels(&windows.test),
            test_conditions: conditions(&windows.test),
        }
    }
}

fn accuracy_of(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// kNN (k tuned on validation), decision tree and linear SVM on one feature set.
///
/// kNN and SVM see rows standardized with training statistics; the tree
/// uses raw values.
pub fn run_classic(data: &ClassicData, cfg: &ClassicConfig, template: &RunMetrics) -> Result<Vec<RunMetrics>> {
    let scaler = Standardizer::fit(&data.train);
    let scale = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> { rows.iter().map(|r| scaler.apply(r)).collect() };
    let (tr, va, te) = (scale(&data.train), scale(&data.val), scale(&data.test));
    let row = |classifier: &str, k: Option<usize>, val_acc: f64, pred: Vec<usize>| -> Result<RunMetrics> {
        Ok(RunMetrics {
            classifier: classifier.into(),
            k,
            val_accuracy: Some(val_acc),
            metrics: evaluate(&pred, &data.y_test, &data.test_conditions)?,
            ..template.clone()
        })
    };
    let mut out = Vec::new();

    let mut best: Option<(f64, Knn)> = None;
    let k_min = cfg.k_min | 1;
    for k in (k_min..=cfg.k_max).step_by(2).filter(|&k| k <= tr.len()) {
        let knn = Knn::fit(&tr, &data.y_train, k)?;
        let acc = accuracy_of(&va.iter().map(|r| knn.predict(r)).collect::<Vec<_>>(), &data.y_val);
        if best.as_ref().is_none_or(|b| acc > b.0) {
            best = Some((acc, knn));
        }
    }
    let (val_acc, knn) = match best {
        Some(b) => b,
        None => (0.0, Knn::fit(&tr, &data.y_train, 1)?),
    };
    out.push(row("knn", Some(knn.k), val_acc, te.iter().map(|r| knn.predict(r)).collect())?);

    let dt = DecisionTree::fit(&data.train, &data.y_train, cfg.tree_depth)?;
    let val_acc = accuracy_of(&data.val.iter().map(|r| dt.predict(r)).collect::<Vec<_>>(), &data.y_val);
    out.push(row("dt", None, val_acc, data.test.iter().map(|r| dt.predict(r)).collect())?);

    let svm = LinearSvm::fit(&tr, &data.y_train, &cfg.svm)?;
    let val_acc = accuracy_of(&va.iter().map(|r| svm.predict(r)).collect::<Vec<_>>(), &data.y_val);
    out.push(row("svm", None, val_acc, te.iter().map(|r| svm.predict(r)).collect())?);
    Ok(out)
}

fn template(experiment: &str, features: String, cfg: &RunConfig) -> RunMetrics {
    RunMetrics {
        experiment: experiment.into(),
        classifier: String::new(),
        features,
        window_s: cfg.window.len_s,
        n_sub: cfg.features.n_sub,
        k: None,
        epochs: None,
        best_epoch: None,
        val_accuracy: None,
        metrics: Metrics {
            accuracy: 0.0,
            n: 0,
            confusion: [[0; 2]; 2],
            per_condition: BTreeMap::new(),
        },
    }
}

/// Baselines 1(a)-(d), 2 and 3(a)-(d) with kNN, DT and SVM each.
pub fn run_baselines(ds: &Dataset, cfg: &RunConfig) -> Result<Vec<RunMetrics>> {
    let windows = ds.split_windows(&cfg.window);
    let pair = cfg.features.pair;
    let cal = ds.phase_calibration(pair.0);
    let mut out = Vec::new();
    for f in ClassicFeature::BASELINES {
        let data = ClassicData::from_rows(&windows, |w| classic_row(w, f, pair, &cal, cfg.classic.n_subwindows));
        out.extend(run_classic(&data, &cfg.classic, &template("baseline", f.label(), cfg))?);
    }
    Ok(out)
}

/// The LSTM's own per-step features, averaged over each window, fed to the
/// classic classifiers.
pub fn run_classic_on_lstm_features(ds: &Dataset, cfg: &RunConfig, fx: &FeatureExtractor) -> Result<Vec<RunMetrics>> {
    let windows = ds.split_windows(&cfg.window);
    let mut err = None;
    let data = ClassicData::from_rows(&windows, |w| match fx.sequence(w) {
        Ok(s) => window_mean(&s),
        Err(e) => {
            err.get_or_insert(e);
            vec![0.0; fx.dim()]
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    run_classic(&data, &cfg.classic, &template("lstm_features", feature_label(&cfg.features), cfg))
}

/// The four feature sets of the LSTM ablation: amplitude only, +PDP, +MP, +both.
pub fn ablation_configs(base: &FeatureConfig) -> Vec<FeatureConfig> {
    [(0, false), (base.m_pdp.max(1), false), (0, true), (base.m_pdp.max(1), true)]
        .into_iter()
        .map(|(m_pdp, use_mp)| FeatureConfig {
            m_pdp,
            use_mp,
            ..base.clone()
        })
        .collect()
}

pub fn run_ablation(ds: &Dataset, cfg: &RunConfig) -> Result<Vec<RunMetrics>> {
    ablation_configs(&cfg.features)
        .into_iter()
        .map(|features| {
            let c = RunConfig { features, ..cfg.clone() };
            Ok(run_lstm(ds, &c, "ablation")?.2)
        })
        .collect()
}

pub const WINDOW_SIZES_S: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

pub fn run_window_sweep(ds: &Dataset, cfg: &RunConfig, sizes: &[f64]) -> Result<Vec<RunMetrics>> {
    sizes
        .iter()
        .map(|&len_s| {
            let c = RunConfig {
                window: WindowConfig { len_s, ..cfg.window },
                ..cfg.clone()
            };
            let row = run_lstm(ds, &c, "window_size")?.2;
            log::info!("window {len_s} s: accuracy {:.4}", row.metrics.accuracy);
            Ok(row)
        })
        .collect()
}

pub fn run_subcarrier_sweep(ds: &Dataset, cfg: &RunConfig, counts: &[usize]) -> Result<Vec<RunMetrics>> {
    counts
        .iter()
        .map(|&n_sub| {
            let c = RunConfig {
                features: FeatureConfig {
                    n_sub,
                    ..cfg.features.clone()
                },
                ..cfg.clone()
            };
            let row = run_lstm(ds, &c, "subcarriers")?.2;
            log::info!("{n_sub} subcarriers: accuracy {:.4}", row.metrics.accuracy);
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_merge_into_profile() {
        let cfg = RunConfig::with_overrides(
            Profile::Desk,
            Some(serde_json::json!({"train": {"hidden_dim": 8}, "window": {"len_s": 1.5}})),
        )
        .unwrap();
        assert_eq!(cfg.train.hidden_dim, 8);
        assert_eq!(cfg.train.n_layers, 3);
        assert_eq!(cfg.window.len_s, 1.5);
        assert_eq!(cfg.window.stride_s, 0.4);
        let paper = RunConfig::for_profile(Profile::Paper);
        assert_eq!(paper.train.hidden_dim, 256);
        assert_eq!(paper.corpus_spec().total(), 85);
    }

    #[test]
    fn invalid_override_rejected() {
        let bad = RunConfig::with_overrides(Profile::Desk, Some(serde_json::json!({"window": {"len_s": -1.0}})));
        assert!(matches!(bad, Err(PipelineError::Config(_))));
        let bad = RunConfig::with_overrides(Profile::Desk, Some(serde_json::json!({"train": {"patience": 1000}})));
        assert!(bad.is_err());
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = RunConfig::for_profile(Profile::Desk);
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.seed += 1;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn labels_and_ablation() {
        let f = FeatureConfig::default();
        assert_eq!(feature_label(&f), "vbss14+pdp3+mp");
        let names: Vec<String> = ablation_configs(&f).iter().map(feature_label).collect();
        assert_eq!(names, ["vbss14", "vbss14+pdp3", "vbss14+mp", "vbss14+pdp3+mp"]);
        let labels: Vec<String> = ClassicFeature::BASELINES.iter().map(|f| f.label()).collect();
        assert_eq!(labels[0], "phase_1a");
        assert_eq!(labels[4], "rss_2");
        assert_eq!(labels[8], "amp_3d");
    }
}
