//! End-to-end tests of the installed binary: exit codes, file layout,
//! and byte-level determinism of the emitted artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_skyhaul");

/// Scenario small enough that a batch finishes in well under a second.
const TINY: &str = r#"{
    "n_ues": 8, "n_clusters": 2, "n_uavs": 1, "n_aps": 2,
    "duration_s": 2.0, "warmup_s": 0.5, "reopt_interval_s": 0.5,
    "pso": {"swarm_size": 4, "iterations": 3}
}"#;

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn tiny_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(&path, TINY).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary spawns")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_result_files_and_exits_zero() {
    let dir = workdir("run_ok");
    let scenario = tiny_scenario(&dir);
    let out_dir = dir.join("results");
    let out = run(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--seeds",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    for f in ["summary.json", "per_ue.csv", "cdf_per_ue.csv", "cdf_per_cell.csv"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mean throughput"), "stdout: {stdout}");

    // summary.json echoes the fully resolved scenario, defaults included.
    let summary = fs::read_to_string(out_dir.join("summary.json")).unwrap();
    for key in ["\"scenario\"", "\"carrier_ghz\": 73.0", "\"n_ues\": 8", "\"n_seeds\": 2"] {
        assert!(summary.contains(key), "summary.json lacks {key}");
    }

    let per_ue = fs::read_to_string(out_dir.join("per_ue.csv")).unwrap();
    assert!(per_ue.starts_with("seed,ue_id,mean_bps\n"));
    // header + 2 seeds x 8 UEs
    assert_eq!(per_ue.lines().count(), 1 + 16);
}

#[test]
fn missing_scenario_exits_one_naming_path() {
    let out = run(&["run", "--scenario", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("missing.json"));
}

#[test]
fn invalid_scenario_exits_two_with_one_violation_per_line() {
    let dir = workdir("run_invalid");
    let path = dir.join("bad.json");
    fs::write(&path, r#"{"n_ues": 0, "warmup_s": 9.0, "duration_s": 2.0}"#).unwrap();
    let out = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    let lines: Vec<&str> = err.lines().filter(|l| !l.trim().is_empty()).collect();
    assert!(lines.len() >= 2, "want one line per violation, got: {err}");
    assert!(err.contains("n_ues"), "stderr: {err}");
    assert!(err.contains("warmup"), "stderr: {err}");
}

#[test]
fn malformed_json_exits_two() {
    let dir = workdir("run_malformed");
    let path = dir.join("garbled.json");
    fs::write(&path, "{not json").unwrap();
    let out = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("garbled.json"));
}

#[test]
fn unknown_sweep_parameter_exits_two() {
    let out = run(&["sweep", "--sweep", "bogus", "--values", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_sweep_value_exits_two_naming_the_point() {
    let out = run(&["sweep", "--sweep", "mode", "--values", "ideal,warp"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("mode") && err.contains("warp"), "stderr: {err}");
}

#[test]
fn repeated_run_is_byte_identical() {
    let dir = workdir("run_determinism");
    let scenario = tiny_scenario(&dir);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--seeds",
            "1",
            "--seed",
            "7",
            "--dump-trajectories",
            "--dump-links",
            "--dump-cells",
            "--dump-pso",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    }
    for f in [
        "summary.json",
        "per_ue.csv",
        "cdf_per_ue.csv",
        "cdf_per_cell.csv",
        "trajectories.csv",
        "links.csv",
        "cells.csv",
        "pso.csv",
    ] {
        let a = fs::read(out_a.join(f)).unwrap();
        let b = fs::read(out_b.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn sweep_emits_sorted_rows_and_per_point_dirs() {
    let dir = workdir("sweep_ok");
    let scenario = tiny_scenario(&dir);
    let out_dir = dir.join("results");
    // values deliberately unsorted; rows must come out ascending
    let out = run(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--sweep",
        "n_uavs",
        "--values",
        "2,1",
        "--seeds",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let sweep = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "value,mean_throughput_bps,jain_mean,jain_std,drop_fraction");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("2,"));

    for point in ["n_uavs=1", "n_uavs=2"] {
        assert!(
            out_dir.join(point).join("summary.json").exists(),
            "missing per-point dir {point}"
        );
    }
}

#[test]
fn mode_sweep_accepts_all_three_spellings() {
    let dir = workdir("sweep_modes");
    let scenario = tiny_scenario(&dir);
    let out_dir = dir.join("results");
    let out = run(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--sweep",
        "mode",
        "--values",
        "ideal,bh-unaware,bh-aware",
        "--seeds",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let sweep = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
    for point in ["mode=ideal", "mode=bh-unaware", "mode=bh-aware"] {
        assert!(out_dir.join(point).is_dir(), "missing {point}");
    }
}

#[test]
fn dump_flags_emit_csvs_with_headers() {
    let dir = workdir("run_dumps");
    let scenario = tiny_scenario(&dir);
    let out_dir = dir.join("results");
    let out = run(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--seeds",
        "1",
        "--dump-trajectories",
        "--dump-links",
        "--dump-cells",
        "--dump-pso",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let expect = [
        ("trajectories.csv", "seed,slot,t_s,uav_id,x_m,y_m,target_x_m,target_y_m"),
        ("links.csv", "seed,slot,kind,src,dst,d3d_m,los,pl_db,sinr_db,rate_bps"),
        ("cells.csv", "seed,slot,cell_id,n_members,access_bps,backhaul_bps,delivered_bps"),
        ("pso.csv", "seed,epoch,iteration,gbest"),
    ];
    for (f, header) in expect {
        let text = fs::read_to_string(out_dir.join(f)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header), "{f} header");
        assert!(lines.next().is_some(), "{f} has no data rows");
    }
    // links carry both access and backhaul rows
    let links = fs::read_to_string(out_dir.join("links.csv")).unwrap();
    assert!(links.contains(",access,"));
    assert!(links.contains(",backhaul,"));
}

#[test]
fn flag_overrides_shape_the_run() {
    let dir = workdir("run_overrides");
    let scenario = tiny_scenario(&dir);
    let out_dir = dir.join("results");
    let out = run(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--mode",
        "bh-aware",
        "--placement",
        "grid",
        "--uavs",
        "2",
        "--clusters",
        "1",
        "--seeds",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let summary = fs::read_to_string(out_dir.join("summary.json")).unwrap();
    for key in [
        "\"mode\": \"bh-aware\"",
        "\"placement\": \"grid\"",
        "\"n_uavs\": 2",
        "\"n_clusters\": 1",
    ] {
        assert!(summary.contains(key), "summary.json lacks {key}\n{summary}");
    }
}
