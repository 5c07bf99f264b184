use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bosetunnel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosetunnel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("manifest has no `{key}`"))
}

/// Data rows of a CSV, after the two comment lines and the header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(3)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SMALL: &str = "x_min = -10\nx_max = 22\nn_points = 128\n";

#[test]
fn single_particle_relaxes_to_half() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("relax");
    let conf = write_config(tmp.path(), &format!("particles = 1\n{SMALL}"));
    let o = bosetunnel(&["relax", "--config", &conf, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e: f64 = manifest_value(&out, "result.energy").parse().unwrap();
    assert!((e - 0.5).abs() < 1e-6, "E = {e}");
    assert_eq!(manifest_value(&out, "check.normalized").split(' ').next(), Some("pass"));
}

#[test]
fn three_particle_coupling_sweep_finds_five_crossings() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("model");
    let conf = write_config(
        tmp.path(),
        "particles = 3\nthreshold = 0.7\nmodel_sweep = lambda0\nmodel_min = 0\nmodel_max = 2\nmodel_points = 20\n",
    );
    let o = bosetunnel(&["model", "--config", &conf, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let header = fs::read_to_string(out.join("energetics.csv")).unwrap();
    let columns: Vec<&str> = header.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(columns, ["lambda0", "E_3_0", "E_2_1", "E_1_2", "E_0_3", "source"]);
    assert_eq!(rows(&out.join("energetics.csv")).len(), 21);
    assert_eq!(rows(&out.join("crossings.csv")).len(), 5);
    assert_eq!(manifest_value(&out, "result.crossings"), "5");
}

#[test]
fn absorber_outside_the_grid_is_a_config_error_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bad");
    let conf = write_config(tmp.path(), "absorber_onset = 56\n");
    let o = bosetunnel(&["propagate", "--config", &conf, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(tmp.path(), "temperature = 3\n");
    let o = bosetunnel(&["relax", "--config", &conf, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let o = bosetunnel(&["relax", "--config", tmp.path().join("none.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn empty_sweep_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sweep");
    let o = bosetunnel(&[
        "sweep", "--param", "threshold", "--values", "", "--command", "model", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn repeated_runs_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    let conf = write_config(tmp.path(), "model_sweep = threshold\nmodel_max = 1.5\nmodel_points = 10\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = bosetunnel(&["model", "--config", &conf, "--out", dir.to_str().unwrap()]);
        assert!(o.status.success());
    }
    for name in ["energetics.csv", "crossings.csv", "spectrum.csv", "prediction.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn short_propagation_writes_tagged_tables() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("prop");
    let conf = write_config(
        tmp.path(),
        &format!("{SMALL}threshold = 0.3\ndt = 0.01\nt_final = 1\nsnapshot_stride = 25\n"),
    );
    let o = bosetunnel(&["analyze", "--config", &conf, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hash = manifest_value(&out, "hash");
    for name in ["pnot.csv", "rho_k.csv", "occupations.csv", "peaks.csv", "potential.csv", "g1.csv", "g2.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(format!("# manifest {hash}").as_str()), "{name}");
        assert!(lines.next().unwrap().starts_with("# units"), "{name}");
    }
    let pnot = rows(&out.join("pnot.csv"));
    assert_eq!(pnot.len(), 5);
    for r in &pnot {
        let p: f64 = r[1].parse().unwrap();
        assert!(p > 0.9 && p <= 1.0 + 1e-12);
    }
    for check in ["norm_non_increasing", "parseval", "exchange_symmetry"] {
        let v = manifest_value(&out, &format!("check.{check}"));
        assert!(v.starts_with("pass"), "{check}: {v}");
    }
}

#[test]
fn threshold_sweep_joins_member_results() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sweep");
    let o = bosetunnel(&[
        "sweep", "--param", "threshold", "--values", "0.1,0.9,2.5", "--command", "model", "--workers", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = rows(&out.join("summary.csv"));
    assert_eq!(summary.len(), 3);
    assert_eq!(summary[0][..4], ["0.1", "ok", "0", "2"]);
    assert_eq!(summary[1][..4], ["0.9", "ok", "2", "0"]);
    assert_eq!(summary[2][1], "failed");
    assert!(summary.iter().all(|r| r.len() == summary[0].len()));
    assert!(out.join("threshold=0.1").join("manifest.txt").exists());
    assert!(!out.join("threshold=2.5").exists());
    assert!(manifest_value(&out, "check.members_ok").starts_with("fail"));
}
