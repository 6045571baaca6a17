use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const Z2: &str = r#"{"numerator":[[0,0],[0,0],[1,0]],"denominator":[[1,0]]}"#;
const Z2M1: &str = r#"{"numerator":[[-1,0],[0,0],[1,0]],"denominator":[[1,0]]}"#;
const INV_Z2: &str = r#"{"numerator":[[1,0]],"denominator":[[0,0],[0,0],[1,0]]}"#;
const LATTES: &str = r#"{"numerator":[[1,0],[0,0],[2,0],[0,0],[1,0]],"denominator":[[0,0],[-4,0],[0,0],[4,0]]}"#;
const SMALL: &str =
    r#"{"samples": 10000, "walkers": 5000, "grid": [128, 128], "tree_points": 20000, "lemniscate_grid": [64, 64]}"#;

fn brolin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brolin")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn classify_prints_flags() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "m.json", Z2M1);
    let out = brolin(&["classify", "--map", &map]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], "brolin-report/1");
    assert_eq!(v["payload"]["algebraic"]["is_square_poly"], true);
    assert_eq!(v["payload"]["exceptional_set"], serde_json::json!(["inf"]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let shared = write(dir.path(), "bad.json", r#"{"numerator":[[0,0],[1,0]],"denominator":[[0,0],[1,0]]}"#);
    assert_eq!(brolin(&["classify", "--map", &shared]).status.code(), Some(2));
    let garbled = write(dir.path(), "garbled.json", r#"{"numerator": [[1, 0]"#);
    assert_eq!(brolin(&["classify", "--map", &garbled]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(brolin(&["classify", "--map", missing.to_str().unwrap()]).status.code(), Some(4));
    let map = write(dir.path(), "m.json", Z2);
    let tol = write(dir.path(), "tol.json", r#"{"gcd": -1}"#);
    assert_eq!(brolin(&["classify", "--map", &map, "--tol-file", &tol]).status.code(), Some(2));
    assert_eq!(brolin(&["escape-rate", "--map", &map, "--bbox", "1,1,0,0"]).status.code(), Some(2));
}

#[test]
fn potential_raster_of_the_square_map() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "m.json", Z2);
    let out_dir = dir.path().join("out");
    let pgm = out_dir.join("p.pgm");
    let out = brolin(&[
        "escape-rate",
        "--map",
        &map,
        "--grid",
        "64,64",
        "--bbox",
        "-2,-2,2,2",
        "--out",
        pgm.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(listing(&out_dir), ["p.pgm", "p.pgm.json", "p.pgm.report.json"]);

    let scale = json(&out_dir.join("p.pgm.json"));
    let (lo, hi) = (scale["min"].as_f64().unwrap(), scale["max"].as_f64().unwrap());
    assert!(lo.abs() < 1e-12);
    let bytes = fs::read(&pgm).unwrap();
    let header = b"P5\n64 64\n65535\n";
    assert_eq!(&bytes[..header.len()], header);
    let px = |i: usize, j: usize| {
        let k = header.len() + 2 * (j * 64 + i);
        u16::from_be_bytes([bytes[k], bytes[k + 1]]) as f64 / 65535.0 * (hi - lo) + lo
    };
    for (i, j) in [(0, 0), (63, 10), (32, 32), (10, 50), (40, 20)] {
        let z = num_complex::Complex64::new(-2.0 + (i as f64 + 0.5) / 16.0, -2.0 + (j as f64 + 0.5) / 16.0);
        let want = z.norm().ln().max(0.0);
        assert!((px(i, j) - want).abs() < (hi - lo) / 65535.0, "({i},{j}): {} vs {want}", px(i, j));
    }
}

#[test]
fn julia_sample_writes_points_and_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "m.json", INV_Z2);
    let out_dir = dir.path().join("out");
    let csv = out_dir.join("points.csv");
    let args = ["julia-sample", "--map", &map, "--samples", "500", "--seed", "9", "--out", csv.to_str().unwrap()];
    assert!(brolin(&args).status.success());
    assert_eq!(listing(&out_dir), ["points.csv", "points.csv.report.json"]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,weight"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().all(|r| (r[0].hypot(r[1]) - 1.0).abs() < 1e-6));
    let env = json(&out_dir.join("points.csv.report.json"));
    assert_eq!(env["config"]["seed"], 9);

    let again = dir.path().join("again.csv");
    let args = ["julia-sample", "--map", &map, "--samples", "500", "--seed", "9", "--out", again.to_str().unwrap()];
    assert!(brolin(&args).status.success());
    assert_eq!(text, fs::read_to_string(&again).unwrap());
}

#[test]
fn harmonic_sample_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "m.json", INV_Z2);
    let hits = dir.path().join("hits.csv");
    let args = [
        "harmonic-sample",
        "--map",
        &map,
        "--walkers",
        "4000",
        "--grid",
        "128,128",
        "--tree-points",
        "20000",
        "--out",
        hits.to_str().unwrap(),
    ];
    let out = brolin(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let env = json(&dir.path().join("hits.csv.report.json"));
    for key in ["mean_steps", "abandoned", "R_launch", "delta"] {
        assert!(env["payload"][key].is_number(), "{key}");
    }
    assert_eq!(fs::read_to_string(&hits).unwrap().lines().count(), 4001);
}

#[test]
fn lemniscate_with_checks() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "m.json", INV_Z2);
    let trace = dir.path().join("trace.csv");
    let args = ["lemniscate", "--map", &map, "--grid", "128,128", "--checks", "--out", trace.to_str().unwrap()];
    let out = brolin(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("polyline,re,im\n"));
    let env = json(&dir.path().join("trace.csv.report.json"));
    let checks = &env["payload"]["checks"];
    assert!(checks["julia_containment"].as_f64().unwrap() < 1e-6);
    assert!(env["payload"]["composition_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn verdict_and_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL);
    let map = write(dir.path(), "basilica.json", Z2M1);
    let report = dir.path().join("report.json");
    let out = brolin(&["verdict", "--map", &map, "--config", &cfg, "--out", report.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&report);
    assert_eq!(v["schema_version"], "brolin-report/1");
    assert_eq!(v["payload"]["map_id"], "basilica");
    assert_eq!(v["payload"]["status"], "consistent");
    assert_eq!(v["config"]["samples"], 10000);

    let lattes = write(dir.path(), "lattes.json", LATTES);
    let out = brolin(&["verdict", "--map", &lattes, "--config", &cfg, "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&report);
    assert_eq!(v["payload"]["status"], "refused");
    assert_eq!(v["payload"]["infinity_in_fatou"], false);
}

#[test]
fn suite_csv_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL);
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = brolin(&["suite", "--config", &cfg, "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(p).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().last().unwrap().starts_with("(z^3+0.1)/z,3,false,false,true,"));
}
