//! End-to-end runs of the `burgers-lab` binary: exit codes, emitted files and
//! their round trip through the library's readers.

use std::fs::File;
use std::path::Path;
use std::process::{Command, Output};

use burgers_lab::blowup::BlowupReport;
use burgers_lab::config::RunConfig;
use burgers_lab::flow::{read_events_csv, read_samples_csv};
use burgers_lab::parabolic::{read_snapshots_csv, RunSummary};
use burgers_lab::stationary::{read_profile_csv, ProfileMetadata};
use burgers_lab::sweep::read_regime_csv;
use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_burgers-lab"))
        .current_dir(dir)
        .env_remove("BURGERS_LAB_OUTPUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_reader(File::open(path).unwrap()).unwrap()
}

#[test]
fn equilibria_lists_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["equilibria", "--p", "3", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["count"], 3);
    assert_eq!(v["equilibria"].as_array().unwrap().len(), 3);
}

#[test]
fn positive_neumann_request_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "shoot", "--bc", "neumann", "--p", "2", "--lambda", "-1", "--sign", "positive",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("nonexistence") && err.contains("no positive Neumann solution"),
        "{err}"
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["equilibria", "--bogus"]);
    assert_eq!(out.status.code(), Some(64));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
    let out = run(dir.path(), &["equilibria", "--p", "3"]);
    assert_eq!(out.status.code(), Some(64));
}

fn write_evolve_config(dir: &Path, extra_options: &str) -> std::path::PathBuf {
    let text = format!(
        r#"{{"run": {{"command": "evolve", "params": {{"p": 3.0, "lambda": 4.0}},
        "grid": {{"left": -1.0, "right": 1.0, "cells": 32}},
        "bc": {{"left": {{"type": "neumann"}}, "right": {{"type": "neumann"}}}},
        "initial": {{"type": "constant", "value": 2.0}},
        "options": {{"final_time": 5.0 {extra_options}}}}}}}"#
    );
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn evolve_from_config_reaches_the_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    write_evolve_config(dir.path(), "");
    let out = run(dir.path(), &["evolve", "--config", "run.json", "--output-dir", "out"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["outcome"]["outcome"], "steady-state");

    let out_dir = dir.path().join("out");
    let snapshots = read_snapshots_csv(File::open(out_dir.join("snapshots.csv")).unwrap()).unwrap();
    assert!(!snapshots.is_empty());
    assert!(snapshots
        .last()
        .unwrap()
        .values
        .iter()
        .all(|&u| (u - 2.0).abs() < 1e-12));
    let summary: RunSummary = read_json(&out_dir.join("summary.json"));
    assert!(summary.t_b.is_none());
    let recorded: RunConfig = read_json(&out_dir.join("run.json"));
    let again = serde_json::to_value(&recorded).unwrap();
    assert_eq!(again["run"]["options"]["blowup_cap"], 1e8);
    assert_eq!(again["run"]["params"]["lambda"], 4.0);
}

#[test]
fn dry_run_prints_the_plan_only() {
    let dir = tempfile::tempdir().unwrap();
    write_evolve_config(dir.path(), "");
    let out = run(
        dir.path(),
        &["evolve", "--config", "run.json", "--dry-run", "--output-dir", "out"],
    );
    assert_eq!(out.status.code(), Some(0));
    let plan = stdout_json(&out);
    assert_eq!(plan["run"]["command"], "evolve");
    assert_eq!(plan["run"]["options"]["cfl"], 0.4);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_config_and_mismatched_command() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"run": {"command": "evolve"}}"#).unwrap();
    let out = run(dir.path(), &["evolve", "--config", "bad.json", "--dry-run"]);
    assert_eq!(out.status.code(), Some(1));
    write_evolve_config(dir.path(), "");
    let out = run(dir.path(), &["sweep", "--config", "run.json", "--dry-run"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn exhausted_step_budget_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    write_evolve_config(dir.path(), r#", "max_steps": 5, "steady_steps": 100"#);
    let out = run(dir.path(), &["evolve", "--config", "run.json", "--output-dir", "out"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shooting_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "shoot",
            "--bc",
            "dirichlet",
            "--p",
            "3.5",
            "--lambda",
            "1",
            "--output-dir",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let profile = read_profile_csv(File::open(dir.path().join("o/profile.csv")).unwrap()).unwrap();
    assert!(profile.len() > 10);
    let meta: ProfileMetadata = read_json(&dir.path().join("o/profile.json"));
    assert!(meta.residual <= 1e-6);
    let _: RunConfig = read_json(&dir.path().join("o/run.json"));
}

#[test]
fn portrait_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "portrait",
            "--p",
            "2",
            "--lambda",
            "1",
            "--seeds",
            "2",
            "--max-parameter",
            "5",
            "--output-dir",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["orbits"].as_array().unwrap().len(), 4);
    let samples = read_samples_csv(File::open(dir.path().join("o/orbit_000.csv")).unwrap()).unwrap();
    assert!(samples.len() > 1);
    read_events_csv(File::open(dir.path().join("o/orbit_000_events.csv")).unwrap()).unwrap();
}

#[test]
fn certify_reports_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["certify", "--p", "2", "--lambda", "0", "--v0", "17", "--confirm"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "unbounded");
    assert_eq!(v["confirmation"]["consistent"], true);
    let out = run(dir.path(), &["certify", "--p", "4", "--lambda", "1", "--beta", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_a_readable_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "sweep",
            "--resolution",
            "3",
            "--threads",
            "2",
            "--svg",
            "dirichlet",
            "--output-dir",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_regime_csv(File::open(dir.path().join("o/regime.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 9);
    let svg = std::fs::read_to_string(dir.path().join("o/regime.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    for entry in std::fs::read_dir(dir.path().join("o/witnesses")).unwrap() {
        read_profile_csv(File::open(entry.unwrap().path()).unwrap()).unwrap();
    }
}

#[test]
fn blowup_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "blowup",
            "--p",
            "2",
            "--lambda",
            "-1",
            "--left",
            "0",
            "--right",
            "40",
            "--cells",
            "400",
            "--bc-left",
            "neumann",
            "--bc-right",
            "dirichlet",
            "--initial",
            "expdecay:1,1",
            "--final-time",
            "5",
            "--snapshot-interval",
            "0.01",
            "--output-dir",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: BlowupReport = read_json(&dir.path().join("o/blowup.json"));
    assert!(report.consistent);
    assert!(report.t_b.is_some());
    assert!(report.t_b.unwrap() <= 1.1 * report.t_star.unwrap() + 1e-3);
}

#[test]
fn super_solution_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "super",
            "--kind",
            "exp-growth",
            "--rate",
            "1",
            "--p",
            "2",
            "--lambda",
            "0",
            "--bc",
            "dynamical:1",
            "--domain",
            "right",
            "--phi-sup",
            "1",
            "--output-dir",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["report"]["certified"], true);
    let out = run(
        dir.path(),
        &[
            "super",
            "--kind",
            "gaussian-decay",
            "--amplitude",
            "5",
            "--p",
            "2",
            "--lambda",
            "0",
            "--bc",
            "dynamical:1",
            "--domain",
            "left",
            "--output-dir",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_burgers-lab"))
        .current_dir(dir.path())
        .env("BURGERS_LAB_OUTPUT_DIR", "from-env")
        .args(["periodic", "--p", "3", "--lambda", "1", "--v0", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("from-env/profile.csv").exists());
}
