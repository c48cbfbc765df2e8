use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn eyring(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eyring")).args(args).output().expect("run eyring")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

const WITTEN: &str = r#"{
  "operator": { "gallery": "witten", "params": { "f": "x1^4/4 - x1^2/2 + x1/10" } },
  "domain": { "lo": [-2.5], "hi": [2.5] },
  "grid": [2001],
  "h": [0.05, 0.07, 0.1]
}"#;

#[test]
fn predict_csv_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), WITTEN);
    let out = tmp.path().join("out");
    let o = eyring(&["predict", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("predict.csv"));
    assert_eq!(&header[..5], &["m_id", "S", "z", "h", "lambda_log10"]);
    assert_eq!(&header[5..], &["sign", "mantissa", "exponent"]);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let l: f64 = r[4].parse().unwrap();
        let m: f64 = r[6].parse().unwrap();
        let e: i64 = r[7].parse().unwrap();
        assert_eq!(r[5], "1");
        assert!((m.log10() + e as f64 - l).abs() < 1e-9);
    }
}

#[test]
fn validate_end_to_end_ratios() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), WITTEN);
    let out = tmp.path().join("out");
    let o = eyring(&["validate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("validate.csv"));
    let col = header.iter().position(|c| c == "ratio").unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let ratio: f64 = r[col].parse().unwrap();
        assert!((0.85..=1.15).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn verify_rejects_kalman_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "operator": { "f": "x1^4/4 - x1^2/2 + x1/10 + x2^2/2", "a0": ["0", "0", "0", "2"], "b0": ["0", "0"] },
  "domain": { "lo": [-2.5, -2.5], "hi": [2.5, 2.5] },
  "grid": [41]
}"#,
    );
    let out = tmp.path().join("out");
    let o = eyring(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&out.join("verify.csv"));
    assert!(rows.iter().any(|r| r[0] == "kalman_rank" && r[3] == "false"));
}

#[test]
fn gallery_configs_verify() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    for name in ["witten", "nonreversible", "kfp", "susy_breaking"] {
        let o = eyring(&["gallery", name, "--out", dir]);
        assert!(o.status.success());
        let cfg = tmp.path().join(format!("{name}.json"));
        let out = tmp.path().join(format!("{name}-out"));
        let o = eyring(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let bad_field = write_config(tmp.path(), r#"{ "operator": { "gallery": "witten" }, "hh": [0.1] }"#);
    assert_eq!(eyring(&["predict", "--config", &bad_field, "--out", out]).status.code(), Some(1));
    let cfg = write_config(tmp.path(), WITTEN);
    assert_eq!(eyring(&["predict", "--config", &cfg, "--h", "0.1,-2", "--out", out]).status.code(), Some(1));
    let bad_expr = write_config(
        tmp.path(),
        r#"{ "operator": { "f": "x1^4 +* 2" }, "domain": { "lo": [-1], "hi": [1] } }"#,
    );
    assert_eq!(eyring(&["landscape", "--config", &bad_expr, "--out", out]).status.code(), Some(1));
    assert_eq!(eyring(&["gallery", "nope", "--out", out]).status.code(), Some(1));
    assert_eq!(eyring(&["predict"]).status.code(), Some(1));
    assert_eq!(eyring(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn graded_run_and_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{ "graded": { "dims": [1, 1], "tau": [1e-3], "core": [[2, 1], [1, 1]], "z": [[1e-3, 0]] } }"#,
    );
    let out = tmp.path().join("out");
    let o = eyring(&["graded", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&out.join("graded.csv"));
    let vals: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(vals, vec![2.0, 0.5]);
    assert!(out.join("resolvent.csv").exists());

    let singular = write_config(tmp.path(), r#"{ "graded": { "dims": [1, 1], "tau": [1e-3], "core": [[0, 1], [1, 0]] } }"#);
    let o = eyring(&["graded", "--config", &singular, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    assert!(eyring(&["gallery", "nonreversible", "--out", dir]).status.success());
    let cfg = tmp.path().join("nonreversible.json");
    let cfg = cfg.to_str().unwrap();
    let mut snaps = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let o = eyring(&["validate", "--config", cfg, "--h", "0.15", "--grid", "81", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        snaps.push(snapshot(&out));
    }
    assert_eq!(snaps[0], snaps[1]);
}

#[test]
fn simulate_writes_plot_data() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "operator": { "gallery": "witten", "params": { "f": "x1^4 - 2*x1^2 + 0.4*x1" } },
  "grid": [1001],
  "h": [0.1]
}"#,
    );
    let out = tmp.path().join("out");
    let o = eyring(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("simulate.csv"));
    assert_eq!(header, vec!["t", "distance"]);
    assert_eq!(rows.len(), 80);
    let (_, wins) = read_csv(&out.join("windows.csv"));
    assert!(wins.iter().all(|w| w[5] == "true" || w[6] == "true"), "{wins:?}");
}
