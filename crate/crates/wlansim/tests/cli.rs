//! End-to-end checks of the command-line interface: flag grammar, exit
//! codes (0 ok, 1 compare breach, 2 bad input, 3 runtime), file outputs,
//! and run-to-run determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wlansim"))
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wlansim_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).trim_end().to_string()
}

#[test]
fn missing_scenario_file_is_an_input_error() {
    let out = bin().args(["--scenario", "/no/such/file.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_line(&out);
    assert!(err.starts_with("error:"), "got {err:?}");
    assert!(!err.contains('\n'), "error must be a single line, got {err:?}");
}

#[test]
fn bad_flags_are_input_errors() {
    let sc = scenario_path("isolated.csv");
    for args in [
        vec!["--scenario".to_string(), sc.display().to_string(), "--time".into(), "0".into()],
        vec![],                                                   // no scenario at all
        vec!["--sweep-wlans".into(), "5..2".into()],              // empty range
        vec!["--sweep-wlans".into(), "0".into()],                 // below the floor
        vec!["--sweep-wlans".into(), "65".into()],                // above the cap
        vec![
            "--sweep-wlans".into(),
            "3".into(),
            "--scenario".into(),
            sc.display().to_string(),
        ],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "args {args:?}: {}", stderr_line(&out));
    }
}

#[test]
fn simulate_is_deterministic_and_honors_output_switches() {
    let sc = scenario_path("isolated.csv");
    let a = tmp_dir("det_a");
    let b = tmp_dir("det_b");
    let run = |dir: &Path| {
        bin()
            .args(["--scenario"])
            .arg(&sc)
            .args(["--time", "2", "--seed", "7", "--out"])
            .arg(dir)
            .output()
            .unwrap()
    };
    let out_a = run(&a);
    let out_b = run(&b);
    assert_eq!(out_a.status.code(), Some(0));
    assert_eq!(out_a.stdout, out_b.stdout);
    assert_eq!(fs::read(a.join("stats.csv")).unwrap(), fs::read(b.join("stats.csv")).unwrap());
    // Logging switches default off: no trace or node log files.
    assert!(!a.join("trace.csv").exists());
    assert!(!a.join("nodes.log").exists());

    let c = tmp_dir("det_c");
    let out_c = bin()
        .args(["--scenario"])
        .arg(&sc)
        .args(["--time", "2", "--seed", "7", "--trace", "on", "--logs", "on", "--out"])
        .arg(&c)
        .output()
        .unwrap();
    assert_eq!(out_c.status.code(), Some(0));
    assert!(c.join("trace.csv").exists());
    assert!(c.join("nodes.log").exists());
    for d in [a, b, c] {
        let _ = fs::remove_dir_all(d);
    }
}

#[test]
fn oracle_modes_emit_the_stats_schema() {
    let sc = scenario_path("isolated.csv");
    for (mode, file) in [("oracle-bianchi", "oracle_bianchi.csv"), ("oracle-ctmn", "oracle_ctmn.csv")] {
        let dir = tmp_dir(mode);
        let out = bin()
            .args(["--scenario"])
            .arg(&sc)
            .args(["--mode", mode, "--out"])
            .arg(&dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr_line(&out));
        let text = fs::read_to_string(dir.join(file)).unwrap();
        assert!(
            text.starts_with("wlan_code,throughput_mbps,mean_delay_ms,collision_prob,occupancy"),
            "{mode} schema mismatch: {text}"
        );
        let _ = fs::remove_dir_all(dir);
    }
}

#[test]
fn compare_exit_code_splits_on_tolerance() {
    let dir = tmp_dir("cmp_ok");
    let ok = bin()
        .args(["--scenario"])
        .arg(scenario_path("isolated.csv"))
        .args(["--mode", "compare", "--time", "5", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", stderr_line(&ok));
    assert!(dir.join("compare.csv").exists());
    assert!(dir.join("stats.csv").exists());
    let _ = fs::remove_dir_all(dir);

    // The chain scenario starves its middle WLAN far outside the band.
    let bad = bin()
        .args(["--scenario"])
        .arg(scenario_path("partial_chain.csv"))
        .args(["--mode", "compare", "--time", "5"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr_line(&bad).contains("10%"), "{}", stderr_line(&bad));
}

#[test]
fn degenerate_sweep_matches_a_plain_run() {
    let sweep_dir = tmp_dir("sweep");
    let out = bin()
        .args(["--sweep-wlans", "1..1", "--seeds", "9", "--time", "1", "--out"])
        .arg(&sweep_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_line(&out));
    let sweep_csv = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    assert!(sweep_csv.starts_with("point,runs,throughput_mean_mbps"), "{sweep_csv}");
    let point_stats = fs::read(sweep_dir.join("n1_seed9").join("stats.csv")).unwrap();

    // The same single-WLAN scenario through the plain path must produce the
    // identical stats file.
    let plain_dir = tmp_dir("plain");
    let sc_file = plain_dir.join("one.csv");
    fs::write(&sc_file, wlansim::scenario::to_csv(&wlansim::scenario::fully_overlapping(1)))
        .unwrap();
    let plain = bin()
        .args(["--scenario"])
        .arg(&sc_file)
        .args(["--time", "1", "--seed", "9", "--out"])
        .arg(&plain_dir)
        .output()
        .unwrap();
    assert_eq!(plain.status.code(), Some(0), "{}", stderr_line(&plain));
    assert_eq!(point_stats, fs::read(plain_dir.join("stats.csv")).unwrap());
    let _ = fs::remove_dir_all(sweep_dir);
    let _ = fs::remove_dir_all(plain_dir);
}

#[test]
fn seed_sweep_over_a_scenario_writes_per_seed_results() {
    let dir = tmp_dir("seeds");
    let out = bin()
        .args(["--scenario"])
        .arg(scenario_path("two_stations.csv"))
        .args(["--seeds", "1,2", "--time", "1", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_line(&out));
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header plus one row per seed: {csv}");
    assert!(dir.join("seed1_seed1/stats.csv").exists());
    assert!(dir.join("seed2_seed2/stats.csv").exists());
    let _ = fs::remove_dir_all(dir);
}
