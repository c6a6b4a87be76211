use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mpsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpsched"))
        .args(args)
        .env_remove("MPSCHED_OUT")
        .output()
        .expect("spawn mpsched")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const TWO_PATHS: &str = r#"
name = "file-two"
sim_seconds = 1.0
runs = 1

[[path]]
forward = { bandwidth_mbps = 4.0, delay_ms = 10.0 }

[[path]]
forward = { bandwidth_mbps = 4.0, delay_ms = 30.0 }
"#;

#[test]
fn presets_lists_builtins() {
    let o = mpsched(&["presets"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = String::from_utf8(o.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names, ["a1", "a2", "a3", "a4", "a5", "three-path"]);
}

#[test]
fn run_writes_histograms_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = mpsched(&[
        "run", "--scenario", "a1", "--scheduler", "fdps", "--runs", "2", "--seed", "7", "--sim-seconds", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["rbd_a1_fdps.csv", "rd_a1_fdps.csv", "summary.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(String::from_utf8(o.stdout).unwrap().contains("Mean of buffer occupancy (in MSS)"));
}

#[test]
fn compare_runs_all_three_schedulers() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpsched(&[
        "compare", "--scenario", "a2", "--runs", "1", "--sim-seconds", "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for s in ["fifo", "rtt-half", "fdps"] {
        assert!(dir.path().join(format!("rbd_a2_{s}.csv")).is_file());
    }
}

#[test]
fn unknown_scenario_is_a_validation_error() {
    let o = mpsched(&["run", "--scenario", "nosuch"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nosuch"));
}

#[test]
fn unknown_flag_prints_usage() {
    let o = mpsched(&["run", "--scenario", "a1", "--frobnicate"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_scheduler_name_is_rejected() {
    let o = mpsched(&["run", "--scenario", "a1", "--scheduler", "round-robin"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn file_without_scheduler_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, TWO_PATHS).unwrap();
    let o = mpsched(&["run", "--scenario", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("scheduler"));
}

#[test]
fn file_scenario_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, format!("scheduler = \"rtt-half\"\n{TWO_PATHS}")).unwrap();
    let out = dir.path().join("out");
    let o = mpsched(&["run", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("rbd_file-two_rtt-half.csv").is_file());
}

#[test]
fn malformed_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "scheduler = \"fdps\"\nruns = = 3\n").unwrap();
    let o = mpsched(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn output_dir_defaults_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_mpsched"))
        .args(["run", "--scenario", "a1", "--runs", "1", "--sim-seconds", "1"])
        .env("MPSCHED_OUT", &out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(Path::new(&out).join("summary.csv").is_file());
}
