//! The `holespin` binary end to end: exit codes, output files, manifest
//! hashing and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use holespin::sequence::ExperimentResult;
use serde_json::Value;
use tempfile::TempDir;

fn holespin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holespin")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn last_stderr_line(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).lines().last().unwrap_or_default().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const RABI: &str = "experiment = \"rabi\"\nseed = 5\nshots = 40\n\n[spin]\nt1 = \"21us\"\n\n[drive]\nsteps = 21\n";

#[test]
fn run_writes_table_fit_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = holespin(&["run", "--experiment", "rabi", "--seed", "3", "--shots", "50", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("rabi.csv")).unwrap();
    let table = ExperimentResult::from_csv(&csv).unwrap();
    assert_eq!(table.points.len(), 251);
    assert_eq!(table.metadata.seed, 3);
    assert!(fs::read_to_string(out.join("rabi.fit.txt")).unwrap().contains("q_factor"));
    let m = manifest(&out);
    assert_eq!(m["seed"], 3);
    assert_eq!(m["experiment"], "rabi");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["config_hash"].as_str().unwrap(), table.metadata.config_hash);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = holespin(&["run", "--experiment", "ramsey", "--seed", "9", "--shots", "200", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &str| fs::read(dir.path().join(d).join("ramsey.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let o = holespin(&["run", "--experiment", "ramsey", "--seed", "10", "--shots", "200", "--out", "c"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    for (out, threads) in [("one", "1"), ("four", "4")] {
        let args = ["run", "--experiment", "chevron", "--seed", "2", "--shots", "20", "--threads", threads, "--out", out];
        assert_eq!(holespin(&args, dir.path()).status.code(), Some(0));
    }
    let read = |d: &str| fs::read(dir.path().join(d).join("chevron.csv")).unwrap();
    assert_eq!(read("one"), read("four"));
}

#[test]
fn chevron_table_has_two_axes() {
    let dir = TempDir::new().unwrap();
    let o = holespin(&["run", "--experiment", "chevron", "--seed", "1", "--shots", "20", "--out", "."], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("chevron.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "drive.delta_Hz,drive.t_ns,mean,stderr"), "{csv}");
    let t = ExperimentResult::from_csv(&csv).unwrap();
    assert_eq!(t.axes.len(), 2);
    assert_eq!(t.points.len(), 41 * 61);
}

#[test]
fn config_hash_ignores_formatting_but_not_physics() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("a.toml"), RABI).unwrap();
    let reformatted = "# same run, different spelling\nseed=5\nexperiment=\"rabi\"\nshots=40\n[drive]\nsteps=21\n[spin]\nt1=\"21000 ns\"   # same T1\n";
    fs::write(p.join("b.toml"), reformatted).unwrap();
    fs::write(p.join("c.toml"), RABI.replace("21us", "22us")).unwrap();
    let mut hashes = Vec::new();
    for name in ["a", "b", "c"] {
        let o = holespin(&["run", "--config", &format!("{name}.toml"), "--out", name], p);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        hashes.push(manifest(&p.join(name))["config_hash"].as_str().unwrap().to_string());
    }
    assert_eq!(hashes[0], hashes[1]);
    assert_ne!(hashes[0], hashes[2]);
    // an override with the same value is the same configuration
    let o = holespin(&["run", "--config", "a.toml", "--set", "spin.t1=21us", "--out", "d"], p);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(manifest(&p.join("d"))["config_hash"].as_str().unwrap(), hashes[0]);
}

#[test]
fn sequence_file_runs() {
    let dir = TempDir::new().unwrap();
    let text = "# resonant Rabi\ninit 30ns\nraman @drive omega=95MHz delta=0MHz phase=0 t=0ns\nreadout 90ns\nsweep drive.t from 0 to 20ns steps 11\n";
    fs::write(dir.path().join("short_rabi.seq"), text).unwrap();
    let o = holespin(&["run", "--sequence", "short_rabi.seq", "--seed", "4", "--shots", "30", "--out", "."], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = ExperimentResult::from_csv(&fs::read_to_string(dir.path().join("short_rabi.csv")).unwrap()).unwrap();
    assert_eq!(t.points.len(), 11);
    assert_eq!(manifest(dir.path())["experiment"], "short_rabi");
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases: [&[&str]; 5] = [
        &["run", "--experiment", "rabi"],
        &["run", "--experiment", "rabi", "--seed", "1", "--set", "spin.t1=5"],
        &["run", "--experiment", "nonsense", "--seed", "1"],
        &["run", "--experiment", "rabi", "--seed", "1", "--config", "missing.toml"],
        &["run", "--bogus-flag"],
    ];
    for args in cases {
        let o = holespin(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(last_stderr_line(&o).starts_with("ERROR 2 "), "{args:?}: {}", last_stderr_line(&o));
    }
    let o = holespin(&["run", "--experiment", "rabi", "--seed", "1", "--set", "spin.t1=5"], dir.path());
    assert!(last_stderr_line(&o).contains("spin.t1"));
}

#[test]
fn parse_errors_exit_3_with_the_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.seq"), "init 30ns\nwait t=$T\nreadout 90ns\n").unwrap();
    let o = holespin(&["run", "--sequence", "bad.seq", "--seed", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let line = last_stderr_line(&o);
    assert!(line.starts_with("ERROR 3 line 2"), "{line}");
}

#[test]
fn fit_failure_exits_4_and_keeps_data() {
    let dir = TempDir::new().unwrap();
    let args = ["run", "--experiment", "t1", "--seed", "1", "--shots", "20", "--set", "drive.steps=3", "--out", "."];
    let o = holespin(&args, dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(last_stderr_line(&o).starts_with("ERROR 4 "));
    let t = ExperimentResult::from_csv(&fs::read_to_string(dir.path().join("t1.csv")).unwrap()).unwrap();
    assert_eq!(t.points.len(), 3);
    assert!(fs::read_to_string(dir.path().join("t1.fit.txt")).unwrap().starts_with("fit failed"));
    assert_eq!(manifest(dir.path())["outputs"][0]["fit_ok"], false);
}

#[test]
fn validate_and_list() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.toml"), RABI).unwrap();
    let o = holespin(&["validate", "--config", "a.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout), "0 violation(s)\n");
    let o = holespin(&["validate", "--config", "a.toml", "--set", "bath.hh_width=-1MHz"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("bath.hh"), "{}", String::from_utf8_lossy(&o.stdout));
    let o = holespin(&["list-experiments"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("phase_sweep") && text.contains("fig3f_overhauser_width"));
}
