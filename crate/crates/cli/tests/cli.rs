use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn floeberg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floeberg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn floeberg")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = floeberg(dir, args);
    assert!(
        out.status.success(),
        "floeberg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_spans(dir: &Path, name: &str, rows: &[(f64, f64, u8, f64)]) -> PathBuf {
    let mut s = String::from("start_m,end_m,class,freeboard_m\n");
    for (a, b, c, f) in rows {
        s.push_str(&format!("{a},{b},{c},{f}\n"));
    }
    let p = dir.join(name);
    std::fs::write(&p, s).unwrap();
    p
}

/// Thick floes at 0.3 m separated by thin ice and leads.
fn separable_spans(km: usize) -> Vec<(f64, f64, u8, f64)> {
    let mut rows = Vec::new();
    for k in 0..km {
        let o = k as f64 * 1000.0;
        rows.push((o, o + 700.0, 1, 0.3));
        rows.push((o + 700.0, o + 850.0, 2, 0.1));
        rows.push((o + 850.0, o + 1000.0, 3, 0.0));
    }
    rows
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_spans(d, "spec.csv", &separable_spans(2));
    let stdout = ok(d, &["synth", "--spec", "spec.csv", "--seed", "7", "-o", "a.csv"]);
    assert!(stdout.contains("seed = 7"));
    ok(d, &["synth", "--spec", "spec.csv", "--seed", "7", "-o", "b.csv"]);
    for (x, y) in [("a.csv", "b.csv"), ("a.truth.csv", "b.truth.csv"), ("a.raster.asc", "b.raster.asc")] {
        assert_eq!(std::fs::read(d.join(x)).unwrap(), std::fs::read(d.join(y)).unwrap(), "{x} vs {y}");
    }
    ok(d, &["synth", "--spec", "spec.csv", "--seed", "8", "-o", "c.csv"]);
    assert_ne!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("c.csv")).unwrap());
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = floeberg(dir.path(), &["ingest", "--photons", "absent.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
    let out = floeberg(dir.path(), &["ingest"]);
    assert_eq!(out.status.code(), Some(2));
    let out = floeberg(dir.path(), &["--config", "absent.conf", "ingest"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.conf"), "train_fraction = 1.5\n").unwrap();
    assert_eq!(floeberg(d, &["--config", "bad.conf", "ingest"]).status.code(), Some(3));
    std::fs::write(d.join("unknown.conf"), "flavour = salty\n").unwrap();
    assert_eq!(floeberg(d, &["--config", "unknown.conf", "ingest"]).status.code(), Some(3));
    std::fs::write(d.join("garbled.csv"), "not,a,photon,file\n1,2,3,4\n").unwrap();
    assert_eq!(floeberg(d, &["ingest", "--photons", "garbled.csv"]).status.code(), Some(3));
}

#[test]
fn config_values_apply_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_spans(d, "spec.csv", &separable_spans(1));
    std::fs::write(d.join("run.conf"), "seed = 11\noutput_dir = out\n").unwrap();
    let stdout = ok(d, &["--config", "run.conf", "synth", "--spec", "spec.csv"]);
    assert!(stdout.contains("seed = 11"));
    assert!(d.join("out/track.csv").exists());
    let stdout = ok(d, &["--config", "run.conf", "--seed", "12", "synth", "--spec", "spec.csv"]);
    assert!(stdout.contains("seed = 12"));
}

#[test]
fn freeboard_without_open_water_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_spans(d, "ice.csv", &[(0.0, 2000.0, 1, 0.3), (2000.0, 3000.0, 2, 0.1)]);
    ok(d, &["synth", "--spec", "ice.csv", "-o", "track.csv"]);
    ok(d, &["ingest", "--photons", "track.csv", "-o", "seg.csv"]);
    ok(d, &["label", "--segments", "seg.csv", "--raster", "track.raster.asc", "-o", "lab.csv"]);
    let out = floeberg(d, &["freeboard", "--labeled", "lab.csv", "-o", "fb.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no sea-surface reference"));
    assert!(!d.join("fb.csv").exists());
}

#[test]
fn bench_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["bench", "--count", "20000", "--runs", "1,2", "-o", "bench.csv"]);
    let text = std::fs::read_to_string(d.join("bench.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "workers,load_s,map_s,reduce_s,speedup_load,speedup_reduce");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,"));
}

/// Mode of the ice freeboards in a freeboard CSV, as a bin center.
fn ice_mode(path: &Path, width: f64) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let mut values = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[4] == "1" || f[4] == "2" {
            values.push(f[8].parse::<f64>().unwrap());
        }
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut counts = std::collections::BTreeMap::new();
    for v in values {
        *counts.entry(((v - min) / width).floor() as i64).or_insert(0usize) += 1;
    }
    let (&k, _) = counts.iter().max_by_key(|(_, &c)| c).unwrap();
    min + (k as f64 + 0.5) * width
}

#[test]
fn full_chain_recovers_ice_freeboard() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_spans(d, "spec.csv", &separable_spans(12));
    ok(d, &["--seed", "3", "synth", "--spec", "spec.csv", "-o", "track.csv"]);
    ok(d, &["ingest", "--photons", "track.csv", "-o", "seg.csv"]);
    ok(d, &["label", "--segments", "seg.csv", "--raster", "track.raster.asc", "-o", "lab.csv"]);
    let stdout = ok(d, &["--workers", "2", "train", "--labeled", "lab.csv", "-o", "model.floe"]);
    let acc: f64 = stdout
        .split("test accuracy ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc >= 0.95, "{stdout}");
    assert!(d.join("model.history.csv").exists() && d.join("model.metrics.csv").exists());

    ok(d, &["classify", "--model", "model.floe", "--photons", "track.csv", "-o", "cls.csv"]);
    ok(d, &["classify", "--model", "model.floe", "--segments", "seg.csv", "-o", "cls2.csv"]);
    assert_eq!(std::fs::read(d.join("cls.csv")).unwrap(), std::fs::read(d.join("cls2.csv")).unwrap());

    ok(d, &["surface", "--labeled", "cls.csv", "-o", "win.csv"]);
    assert!(std::fs::read_to_string(d.join("win.csv"))
        .unwrap()
        .starts_with("center,method,n_leads,h_ref,sigma_sq_ref,interpolated\n"));
    ok(d, &["freeboard", "--labeled", "cls.csv", "-o", "fb.csv"]);
    let mode = ice_mode(&d.join("fb.csv"), 0.02);
    assert!((mode - 0.3).abs() < 0.05, "ice mode {mode}");
    assert!(d.join("fb.hist.csv").exists());

    // same inputs, same bytes
    ok(d, &["freeboard", "--labeled", "cls.csv", "-o", "fb_again.csv", "--workers", "3"]);
    assert_eq!(std::fs::read(d.join("fb.csv")).unwrap(), std::fs::read(d.join("fb_again.csv")).unwrap());

    ok(d, &["report", "--freeboard", "fb.csv", "--histogram", "fb.hist.csv", "-o", "plots"]);
    let scatter = std::fs::read_to_string(d.join("plots/elevation.svg")).unwrap();
    assert!(scatter.starts_with("<svg") && scatter.contains("thick ice"));
    assert!(d.join("plots/freeboard_histogram.svg").exists());
}
