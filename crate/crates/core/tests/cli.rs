use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rideside(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rideside"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_corpus_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = rideside(&["--seed", "3", "simulate", "--out", &s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = fs::read_to_string(a.join("manifest.csv")).unwrap();
    assert_eq!(manifest, fs::read_to_string(b.join("manifest.csv")).unwrap());
    // header plus 5 conditions x 2 sides x 4 rides
    assert_eq!(manifest.lines().count(), 41);
    let mut cells: Vec<String> = manifest
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{}/{}", f[2], f[3])
        })
        .collect();
    cells.sort();
    cells.dedup();
    assert_eq!(cells.len(), 10, "{cells:?}");
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn scenario_file_writes_one_trace() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("sc.json");
    fs::write(&sc, r#"{"ride_id": "probe", "duration_s": 1.0, "rider_pos": [0.0, 3.0]}"#).unwrap();
    let out = dir.path().join("probe.jsonl");
    let o = rideside(&["simulate", "--scenario", &s(&sc), "--out", &s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = rideside::csi::load_trace_file(&out).unwrap();
    assert_eq!(trace.header.ride_id, "probe");
    assert_eq!(trace.header.side, rideside::csi::Side::Left);
}

#[test]
fn invalid_scenario_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("bad.json");
    fs::write(&sc, r#"{"packet_rate_pps": -1.0}"#).unwrap();
    let o = rideside(&["simulate", "--scenario", &s(&sc), "--out", &s(dir.path())]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    fs::write(&sc, "not json").unwrap();
    assert!(!rideside(&["simulate", "--scenario", &s(&sc), "--out", &s(dir.path())]).status.success());
}

#[test]
fn report_without_metrics_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("metrics");
    fs::create_dir(&empty).unwrap();
    let o = rideside(&["report", "--metrics", &s(&empty), "--out", &s(&dir.path().join("r")), "--no-pdr"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no metrics"));
}

#[test]
fn bad_config_and_profile_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"window": {"len_s": -3.0}}"#).unwrap();
    assert!(!rideside(&["--config", &s(&cfg), "simulate", "--out", &s(dir.path())]).status.success());
    assert!(!rideside(&["--profile", "huge", "simulate", "--out", &s(dir.path())]).status.success());
}

#[test]
fn eval_without_model_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = rideside(&["eval", "--corpus", &s(dir.path()), "--model", &s(&dir.path().join("none.json"))]);
    assert!(!o.status.success());
}
