//! Plot-ready CSV tables: sweeps and baselines gathered from metrics files,
//! per-packet feature time series of one ride, and delivery ratio against
//! distance.

use std::fs;
use std::path::{Path, PathBuf};

use crate::csi::Trace;
use crate::features::{amplitude_difference, PdpTransform};
use crate::pipeline::{io_err, MetricsFile, PipelineError, Result, RunMetrics};
use crate::sim::PdrRow;

/// Every metrics file in `dir` (sorted by name). Errors when there is none.
pub fn collect_metrics(dir: &Path) -> Result<Vec<(PathBuf, MetricsFile)>> {
    if !dir.is_dir() {
        return Err(PipelineError::Missing(format!("metrics directory {}", dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        match MetricsFile::load(&p) {
            Ok(m) => out.push((p, m)),
            Err(e) => log::debug!("skipping {}: {e}", p.display()),
        }
    }
    if out.is_empty() {
        return Err(PipelineError::Missing(format!("no metrics files in {}", dir.display())));
    }
    Ok(out)
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let f = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub const METRICS_COLUMNS: [&str; 12] = [
    "source",
    "experiment",
    "classifier",
    "features",
    "window_s",
    "n_sub",
    "k",
    "accuracy",
    "n_test",
    "val_accuracy",
    "epochs",
    "best_epoch",
];

fn metrics_record(source: &str, r: &RunMetrics) -> Vec<String> {
    vec![
        source.to_string(),
        r.experiment.clone(),
        r.classifier.clone(),
        r.features.clone(),
        r.window_s.to_string(),
        r.n_sub.to_string(),
        opt(r.k),
        r.metrics.accuracy.to_string(),
        r.metrics.n.to_string(),
        opt(r.val_accuracy),
        opt(r.epochs),
        opt(r.best_epoch),
    ]
}

/// Write `rows` (with their source file names) under `METRICS_COLUMNS`.
pub fn write_metrics_table(path: &Path, rows: &[(String, &RunMetrics)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(METRICS_COLUMNS).map_err(csv_err(path))?;
    for (src, r) in rows {
        w.write_record(metrics_record(src, r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Tables written by [`write_tables`]; each is skipped when it has no rows.
pub const TABLES: [(&str, &str); 5] = [
    ("summary.csv", ""),
    ("window_size.csv", "window_size"),
    ("subcarriers.csv", "subcarriers"),
    ("ablation.csv", "ablation"),
    ("baselines.csv", "baseline"),
];

/// Split the collected rows into the per-experiment tables. Returns the
/// paths written.
pub fn write_tables(metrics: &[(PathBuf, MetricsFile)], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut all: Vec<(String, &RunMetrics)> = Vec::new();
    for (p, m) in metrics {
        let name = p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        all.extend(m.rows.iter().map(|r| (name.clone(), r)));
    }
    let mut written = Vec::new();
    for (file, experiment) in TABLES {
        let mut rows: Vec<(String, &RunMetrics)> = all
            .iter()
            .filter(|(_, r)| experiment.is_empty() || r.experiment == experiment || (experiment == "baseline" && r.experiment == "lstm_features"))
            .cloned()
            .collect();
        if rows.is_empty() {
            continue;
        }
        match experiment {
            "window_size" => rows.sort_by(|a, b| a.1.window_s.total_cmp(&b.1.window_s)),
            "subcarriers" => rows.sort_by_key(|r| r.1.n_sub),
            _ => {}
        }
        let path = out_dir.join(file);
        write_metrics_table(&path, &rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Per-packet amplitude difference (C - A) on every subcarrier:
/// columns `t, seq, amp_diff_0 .. amp_diff_{n-1}`.
pub fn write_amplitude_series(trace: &Trace, pair: (usize, usize), path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let n = trace.header.n_sub;
    let mut header = vec!["t".to_string(), "seq".to_string()];
    header.extend((0..n).map(|k| format!("amp_diff_{k}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for p in &trace.packets {
        let mut rec = vec![p.timestamp.to_string(), p.seq.to_string()];
        rec.extend(amplitude_difference(p, pair).iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Per-packet power delay profile of both antennas of `pair`:
/// columns `t, seq, pdp_0 .. pdp_{2n-1}` (first antenna's taps, then the second's).
pub fn write_pdp_series(trace: &Trace, pair: (usize, usize), path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let n = trace.header.n_sub;
    let t = PdpTransform::new(n);
    let mut header = vec!["t".to_string(), "seq".to_string()];
    header.extend((0..2 * n).map(|k| format!("pdp_{k}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for p in &trace.packets {
        let mut rec = vec![p.timestamp.to_string(), p.seq.to_string()];
        rec.extend(t.pdp(p, pair, false).iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub const PDR_COLUMNS: [&str; 7] = ["distance_m", "condition", "rss_dbm", "sent", "received", "pdr", "expected_pdr"];

pub fn write_pdr_table(rows: &[PdrRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(PDR_COLUMNS).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.distance_m.to_string(),
            if r.nlos { "nlos" } else { "los" }.to_string(),
            r.rss_dbm.to_string(),
            r.sent.to_string(),
            r.received.to_string(),
            r.pdr.to_string(),
            r.expected_pdr.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
