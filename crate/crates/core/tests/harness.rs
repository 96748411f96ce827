use std::path::Path;
use std::process::Command;

use camo::harness::{run_experiment, ExperimentConfig, RunOptions, RunReport};

fn run_in(toml: &str, dir: &Path) -> RunReport {
    let cfg = ExperimentConfig::from_toml(toml).unwrap();
    run_experiment(&cfg, &RunOptions { out_dir: Some(dir.to_path_buf()), ..RunOptions::default() }).unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn zero_horizon_is_one_row_of_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in("preset = \"ring-v1\"\nhorizon = 0\n", dir.path());
    assert!(r.passed());
    let csv = read(dir.path(), "trajectories.csv");
    assert_eq!(csv, "time_index,no_attack,camouflage,state_perception\n0,0,0,0\n");
}

#[test]
fn budget_columns_follow_the_budget_list() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(
        "preset = \"chessboard-2x2-v1\"\nsweep = false\nhorizon = 3\n\
         modes = [\"none\", \"camouflage\", \"spa\", \"budgeted\"]\nbudgets = [1, 2, 3, 4, 6, 12]\n",
        dir.path(),
    );
    assert!(r.passed(), "{:?}", r.checks);
    let header = read(dir.path(), "trajectories.csv").lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "time_index,no_attack,camouflage,state_perception,budget_1,budget_2,budget_3,budget_4,budget_6,budget_12"
    );
    let finals: Vec<f64> = r.summary.iter().skip(3).map(|s| s.final_value).collect();
    assert_eq!(finals.len(), 6);
    assert!(finals.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn same_config_gives_identical_bytes() {
    let cfg = "preset = \"ring-v1\"\nbounds = true\nrollout_episodes = 2000\nseed = 3\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_in(cfg, a.path());
    run_in(cfg, b.path());
    for f in [
        "trajectories.csv",
        "summary.csv",
        "bounds.csv",
        "orientation.csv",
        "rollouts.csv",
        "checks.csv",
        "manifest.json",
    ] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
}

#[test]
fn seed_moves_rollouts_only() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_in("preset = \"ring-v1\"\nrollout_episodes = 5000\nseed = 1\n", a.path());
    let rb = run_in("preset = \"ring-v1\"\nrollout_episodes = 5000\nseed = 2\n", b.path());
    assert_eq!(read(a.path(), "trajectories.csv"), read(b.path(), "trajectories.csv"));
    assert_ne!(ra.rollouts[1].mean, rb.rollouts[1].mean);
    assert!(ra.passed() && rb.passed());
}

#[test]
fn transposed_table_shifts_ratios_but_keeps_invariants() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let dest = run_in("preset = \"ring-v1\"\nbounds = true\n", a.path());
    let origin = run_in("preset = \"ring-v1\"\nreward_rows = \"origin\"\nbounds = true\n", b.path());
    assert_ne!(dest.ratio("camouflage"), origin.ratio("camouflage"));
    assert!(dest.passed() && origin.passed());
}

#[test]
fn orientation_table_has_all_four_settings() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in("preset = \"ring-v1\"\ntarget_ratios = [0.344, 0.331]\n", dir.path());
    assert_eq!(r.orientation.len(), 4);
    let closest = r.closest_orientation.unwrap();
    assert!(r.orientation.iter().all(|o| o.deviation.unwrap() >= closest.deviation.unwrap()));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert!(manifest["report"]["closest_orientation"]["deviation"].is_number());
}

#[test]
fn config_errors_name_the_field() {
    let cfg = ExperimentConfig::from_toml("preset = \"ring-v1\"\nrecipients = 0\n").unwrap();
    let err = run_experiment(&cfg, &RunOptions::default()).unwrap_err().to_string();
    assert!(err.contains("recipients"), "{err}");
    assert!(ExperimentConfig::from_toml("preset = \"ring-v1\"\nbudgetz = [1]\n").is_err());
}

fn camo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_camo"))
}

#[test]
fn cli_run_respects_output_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from_env");
    let flag_out = dir.path().join("from_flag");
    let status =
        camo().args(["run", "ring-v1"]).env("CAMO_OUT_DIR", &env_out).current_dir(dir.path()).output().unwrap().status;
    assert!(status.success());
    assert!(env_out.join("summary.csv").exists());
    let status = camo()
        .args(["run", "ring-v1", "--out"])
        .arg(&flag_out)
        .env("CAMO_OUT_DIR", &env_out)
        .current_dir(dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(flag_out.join("summary.csv").exists());
    let status =
        camo().args(["run", "ring-v1"]).env_remove("CAMO_OUT_DIR").current_dir(dir.path()).output().unwrap().status;
    assert!(status.success());
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn cli_reads_config_files_and_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "preset = \"chessboard-2x2-v1\"\nrollout_episodes = 1000\n").unwrap();
    let out = camo().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("camouflage"));

    std::fs::write(&cfg, "preset = \"nowhere\"\n").unwrap();
    let out = camo().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("preset"));
}

#[test]
fn cli_certify_small() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        camo().args(["certify", "--cases", "5", "--oracle-cases", "3", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = read(dir.path(), "certify.csv");
    assert!(csv.starts_with("suite,cases,failures"));
    assert_eq!(csv.lines().count(), 9);
}
