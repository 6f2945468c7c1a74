use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_v2v-aoi")).args(args).output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_two_vehicles_uses_full_power() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "two.txt", "# two cars\n2\n0 12\n12 0\n");
    let out = bin(&["solve", "--scene", &scene, "--format", "records"]);
    assert!(out.status.success());
    let recs = records(&out);
    assert_eq!(recs[0]["record"], "config");
    let solve = recs.iter().find(|r| r["record"] == "solve").unwrap();
    assert_eq!(solve["result"]["power_w"], serde_json::json!([[0.0, 23.0], [23.0, 0.0]]));
}

#[test]
fn asymmetric_scene_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "bad.txt", "0 10 20\n11 0 30\n20 30 0\n");
    let out = bin(&["solve", "--scene", &scene]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn unknown_flag_is_rejected() {
    assert!(!bin(&["compare", "--bogus"]).status.success());
}

#[test]
fn aoi_modes_and_looptime() {
    let out = bin(&["aoi", "--trials", "2", "--format", "records", "--looptime", "0.2"]);
    assert!(out.status.success());
    let rows: Vec<Value> = records(&out).into_iter().filter(|r| r["record"] == "aoi").collect();
    assert_eq!(rows.len(), 3 * 2 * 3);
    for r in &rows {
        let row = &r["row"];
        let s = &row["summary"];
        let eff = s["effective_mean_age_s"].as_f64().unwrap();
        assert!((eff - s["mean_age_s"].as_f64().unwrap() - 0.2).abs() < 1e-12);
        if row["mode"] == "Zero-Delay" {
            assert_eq!(row["proxy"]["combined"], serde_json::json!({"ap30": 0.864, "ap50": 0.859, "ap70": 0.805}));
        }
    }
    for pair in rows.chunks(3) {
        let mean = |i: usize| pair[i]["row"]["summary"]["mean_age_s"].as_f64().unwrap();
        assert_eq!(pair[1]["row"]["mode"], "DefaultPA");
        assert_eq!(pair[2]["row"]["mode"], "GreedyPA");
        assert!(mean(2) <= mean(1), "greedy {} vs default {}", mean(2), mean(1));
    }
}

#[test]
fn compare_records_identical_across_jobs_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let plot = dir.path().join("plot.tsv");
    let args = ["compare", "--trials", "2", "--n", "3,4", "--seed", "5"];
    let first = bin(&[&args[..], &["--out", a.to_str().unwrap(), "--plot-data", plot.to_str().unwrap()]].concat());
    let second = bin(&[&args[..], &["--out", b.to_str().unwrap(), "--jobs", "2"]].concat());
    assert!(first.status.success() && second.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!std::fs::read_to_string(&plot).unwrap().is_empty());
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "trials = 1\nn = [3]\nseed = 9\nlearn-rate = 0.1\n");
    let out = bin(&["solve", "--config", &cfg, "--seed", "4", "--format", "records"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = &records(&out)[0]["config"];
    assert_eq!(config["master_seed"], 4);
    assert_eq!(config["greedy"]["learn_rate"], 0.1);
}

#[test]
fn verify_passes_on_small_batch() {
    let out = bin(&["verify", "--trials", "2", "--grid-points", "8", "--generations", "2000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn verify_exits_two_when_gap_exceeds_threshold() {
    // One greedy epoch barely leaves the uniform start.
    let out = bin(&["verify", "--trials", "1", "--epochs", "1", "--gap-threshold", "0.01", "--generations", "200"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}
