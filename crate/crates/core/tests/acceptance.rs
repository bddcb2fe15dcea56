//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion reports a PASS/FAIL line (visible in plain `cargo test` output).
//! A FAIL only turns into a nonzero exit with `RIDESIDE_STRICT=1`.
//!
//!     cargo test --test acceptance
//!     RIDESIDE_STRICT=1 cargo test --test acceptance

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rideside::classify::LstmModel;
use rideside::csi::{CsiPacket, SPEED_OF_LIGHT};
use rideside::features::{multipath_profile, FeatureSequence, PdpTransform};
use rideside::pipeline::{
    run_baselines, run_classic_on_lstm_features, run_lstm, run_window_sweep, Dataset, Profile, RunConfig,
    WINDOW_SIZES_S,
};
use rideside::rng;
use rideside::sim::{make_corpus, simulate, subcarrier_frequencies, LossModel, Point, PropagationPath, Scenario, VehicleBody};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_row<R: Rng>(r: &mut R, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()
}

fn naive_idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|t| {
            x.iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, 2.0 * PI * ((k * t) % n) as f64 / n as f64))
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

fn pdp_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(101, "acceptance/pdp");
    let t = PdpTransform::new(30);
    let mut worst: f64 = 0.0;
    let mut worst_parseval: f64 = 0.0;
    for _ in 0..1000 {
        let rows = vec![random_row(&mut r, 30), random_row(&mut r, 30)];
        let packet = CsiPacket {
            timestamp: 0.0,
            seq: 0,
            rss: vec![0.0; 2],
            csi: rows.clone(),
        };
        let pdp = t.pdp(&packet, (0, 1), false);
        for (a, row) in rows.iter().enumerate() {
            let fast = t.cir(row);
            let slow = naive_idft(row);
            let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (i, (f, s)) in fast.iter().zip(&slow).enumerate() {
                worst = worst.max((f - s).norm() / scale);
                worst = worst.max((pdp[a * 30 + i] - s.norm()).abs() / scale);
            }
            let time: f64 = fast.iter().map(|c| c.norm_sqr()).sum();
            let freq: f64 = row.iter().map(|c| c.norm_sqr()).sum::<f64>() / 30.0;
            worst_parseval = worst_parseval.max((time - freq).abs() / freq);
        }
    }
    let el = start.elapsed();
    check(
        worst <= 1e-9 && worst_parseval <= 1e-9 && el < Duration::from_secs(5),
        format!("max rel err {worst:.1e}, Parseval {worst_parseval:.1e}, {el:.2?}"),
    )
}

fn multipath_oracle() -> Outcome {
    let mut r = rng::stream(102, "acceptance/mp");
    let mut worst: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for _ in 0..1000 {
        let x1 = random_row(&mut r, 30);
        let x2 = random_row(&mut r, 30);
        let a: f64 = x1.iter().map(|c| c.norm_sqr()).sum();
        let d: f64 = x2.iter().map(|c| c.norm_sqr()).sum();
        let b: Complex64 = x1.iter().zip(&x2).map(|(p, q)| p * q.conj()).sum();
        let tr = a + d;
        let det = a * d - b.norm_sqr();
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        let packet = CsiPacket {
            timestamp: 0.0,
            seq: 0,
            rss: vec![0.0; 2],
            csi: vec![x1, x2],
        };
        let mp = multipath_profile(&packet, (0, 1), 1e6);
        worst = worst.max((mp.lambda1 - l1).abs() / tr).max((mp.lambda2 - l2).abs() / tr);
        worst_trace = worst_trace.max((mp.lambda1 + mp.lambda2 - tr).abs() / tr);
    }
    check(worst <= 1e-9 && worst_trace <= 1e-9, format!("max rel err {worst:.1e}, trace {worst_trace:.1e}"))
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(103, "acceptance/grad");
    let mut model = LstmModel::new(5, 4, 3, 0.0, &mut r);
    let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..5).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let seq = FeatureSequence::from_rows(rows, 3, 5);
    let label = 1;
    let fwd = model.forward::<rng::StreamRng>(&seq, None).map_err(|e| e.to_string())?;
    let mut grads = model.zeros_like();
    model.backward(&fwd, label, &mut grads);
    let analytic: Vec<f64> = grads.params().iter().flat_map(|p| p.iter().copied()).collect();
    let loss = |m: &LstmModel| -m.predict_proba(&seq).expect("shapes match")[label].ln();

    let eps = 1e-5;
    let (mut idx, mut failures) = (0, 0);
    let mut worst: f64 = 0.0;
    for t in 0..model.params().len() {
        for i in 0..model.params()[t].len() {
            let orig = model.params()[t][i];
            model.params_mut()[t][i] = orig + eps;
            let up = loss(&model);
            model.params_mut()[t][i] = orig - eps;
            let down = loss(&model);
            model.params_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let diff = (numeric - analytic[idx]).abs();
            let tol = (1e-4 * numeric.abs().max(analytic[idx].abs())).max(1e-6);
            if diff > tol {
                failures += 1;
            }
            worst = worst.max(diff / tol);
            idx += 1;
        }
    }
    let el = start.elapsed();
    check(
        failures == 0 && el < Duration::from_secs(60),
        format!("{idx} parameters, {failures} failures, worst diff/tol {worst:.1e}, {el:.2?}"),
    )
}

fn geometry() -> Outcome {
    let mut r = rng::stream(104, "acceptance/geometry");
    let base = Scenario {
        vehicle_speed: 0.0,
        vehicle_start_x: 0.0,
        duration_s: 0.02,
        paths: vec![PropagationPath::direct()],
        body: VehicleBody::none(),
        noise_std: 0.0,
        timing_jitter: 0.0,
        loss_model: LossModel::lossless(),
        ..Scenario::default()
    };
    let (a, c) = base.antennas.used_pair;
    let d = (base.antennas.lateral_offset(a) - base.antennas.lateral_offset(c)).abs();
    let freqs = subcarrier_frequencies(base.antennas.carrier_freq_hz);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let range = r.random_range(100.0 * d..1000.0 * d);
        let theta = r.random_range(-PI..PI);
        let sc = Scenario {
            rider_pos: Point::new(range * theta.cos(), range * theta.sin()),
            seed: i,
            ..base.clone()
        };
        let trace = simulate(&sc).map_err(|e| e.to_string())?;
        let p = trace.packets.first().ok_or("no packet")?;
        for (k, f) in freqs.iter().enumerate() {
            let measured = (p.csi[c][k] * p.csi[a][k].conj()).arg();
            let expected = -2.0 * PI * d * theta.sin() * f / SPEED_OF_LIGHT;
            let err = (measured - expected).rem_euclid(2.0 * PI);
            worst = worst.max(err.min(2.0 * PI - err));
        }
    }
    check(worst <= 1e-3, format!("max phase error {worst:.2e} rad over 100 geometries x 30 subcarriers"))
}

fn desk_dataset(dir: &Path) -> Result<(RunConfig, Dataset), String> {
    let cfg = RunConfig::for_profile(Profile::Desk);
    if !dir.join("manifest.csv").exists() {
        make_corpus(&cfg.corpus_spec(), &cfg.corpus, cfg.seed, dir).map_err(|e| e.to_string())?;
    }
    let ds = Dataset::load(dir, cfg.seed).map_err(|e| e.to_string())?;
    Ok((cfg, ds))
}

fn end_to_end(cfg: &RunConfig, ds: &Dataset) -> Outcome {
    let start = Instant::now();
    let (model, _, row) = run_lstm(ds, cfg, "lstm").map_err(|e| e.to_string())?;
    let classic = run_classic_on_lstm_features(ds, cfg, &model.extractor).map_err(|e| e.to_string())?;
    let el = start.elapsed();
    let lstm = row.metrics.accuracy;
    let best = classic.iter().map(|r| r.metrics.accuracy).fold(0.0, f64::max);
    let others: Vec<String> = classic.iter().map(|r| format!("{} {:.4}", r.classifier, r.metrics.accuracy)).collect();
    check(
        lstm >= 0.90 && best < lstm && el < Duration::from_secs(15 * 60),
        format!("{} rides, lstm {lstm:.4} on {} windows; {}; {el:.1?}", ds.rides.len(), row.metrics.n, others.join(", ")),
    )
}

fn baseline_ordering(cfg: &RunConfig, ds: &Dataset) -> Outcome {
    let rows = run_baselines(ds, cfg).map_err(|e| e.to_string())?;
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for r in &rows {
        let family = r.features.split('_').next().unwrap_or_default();
        let e = best.entry(family).or_insert(0.0);
        *e = e.max(r.metrics.accuracy);
    }
    let get = |f: &str| best.get(f).copied().unwrap_or(f64::NAN);
    let (amp, rss, phase) = (get("amp"), get("rss"), get("phase"));
    check(amp >= rss && rss >= phase, format!("amplitude {amp:.4} >= rss {rss:.4} >= phase {phase:.4}"))
}

fn window_trend(cfg: &RunConfig, ds: &Dataset) -> Outcome {
    let rows = run_window_sweep(ds, cfg, &WINDOW_SIZES_S).map_err(|e| e.to_string())?;
    let acc: Vec<f64> = rows.iter().map(|r| r.metrics.accuracy).collect();
    let ok = acc.windows(2).all(|w| w[1] >= w[0] - 0.02);
    let pairs: Vec<String> = rows.iter().map(|r| format!("{}s {:.4}", r.window_s, r.metrics.accuracy)).collect();
    check(ok, pairs.join(", "))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rideside"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn without_metadata(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("metrics file is not an object")?.remove("metadata");
    Ok(v)
}

fn determinism(root: &Path) -> Outcome {
    let corpus = root.join("cli_corpus");
    let s = |p: &Path| p.to_string_lossy().into_owned();
    run_cli(&["simulate", "--out", &s(&corpus)])?;
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = root.join(format!("train_{run}"));
        run_cli(&["train", "--corpus", &s(&corpus), "--out", &s(&out)])?;
        files.push(out.join("metrics").join("train.json"));
    }
    let (a, b) = (without_metadata(&files[0])?, without_metadata(&files[1])?);
    check(a == b, format!("metrics identical: {}", a == b))
}

fn pdr() -> Outcome {
    let cfg = rideside::sim::RangeConfig::default();
    let rows = rideside::sim::pdr_curve(&cfg, true, 7).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| (r.pdr - r.expected_pdr).abs()).fold(0.0, f64::max);
    let monotone = rows.windows(2).all(|w| w[1].pdr < w[0].pdr);
    let curve: Vec<String> = rows.iter().map(|r| format!("{:.0}m {:.3}", r.distance_m, r.pdr)).collect();
    check(
        rows.len() == 12 && monotone && worst <= 0.03,
        format!("max |sim - expected| {worst:.4}, monotone {monotone}; {}", curve.join(" ")),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let corpus = tmp.path().join("corpus");
    let data = desk_dataset(&corpus);

    let corpus_check = |f: fn(&RunConfig, &Dataset) -> Outcome| match &data {
        Ok((cfg, ds)) => f(cfg, ds),
        Err(e) => Err(format!("corpus: {e}")),
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 pdp oracle", Box::new(pdp_oracle)),
        ("2 multipath oracle", Box::new(multipath_oracle)),
        ("3 gradient check", Box::new(gradient_check)),
        ("4 geometry", Box::new(geometry)),
        ("5 end-to-end accuracy", Box::new(move || corpus_check(end_to_end))),
        ("6 baseline ordering", Box::new(move || corpus_check(baseline_ordering))),
        ("7 window-size trend", Box::new(move || corpus_check(window_trend))),
        ("8 determinism", Box::new(|| determinism(tmp.path()))),
        ("9 delivery ratio", Box::new(pdr)),
    ];

    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let outcome = run();
        let el = t.elapsed();
        match outcome {
            Ok(d) => println!("PASS {name}: {d} [{el:.1?}]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{el:.1?}]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("RIDESIDE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
