// Copyright 2026 The spintomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spintomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spintomo")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    fs::write(dir.join(name), contents).unwrap();
    path(dir, name)
}

fn json(output: &Output) -> Value {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    serde_json::from_slice(&output.stdout).unwrap()
}

fn vec3(v: &Value) -> [f64; 3] {
    let a = v.as_array().unwrap();
    [0, 1, 2].map(|i| a[i].as_f64().unwrap())
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn axis_records(dir: &Path, name: &str, plus: [u64; 3], n: u64) -> String {
    let axes = ["[1.0,0.0,0.0]", "[0.0,1.0,0.0]", "[0.0,0.0,1.0]"];
    let rows: Vec<String> = axes
        .iter()
        .zip(plus)
        .map(|(a, p)| {
            let x = (2 * p) as f64 / n as f64 - 1.0;
            format!(r#"{{"a":{a},"N":{n},"n_plus":{p},"n_minus":{},"x":{x}}}"#, n - p)
        })
        .collect();
    write(dir, name, &format!("[{}]", rows.join(",")))
}

#[test]
fn simulate_writes_one_row_per_setting() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "config.json", "{}");
    let out = path(dir.path(), "records.json");
    assert!(spintomo(&["simulate", "--config", &config, "--out", &out]).status.success());
    let records: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows = records.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert_eq!(row["n_plus"].as_u64().unwrap() + row["n_minus"].as_u64().unwrap(), 20);
        assert_eq!(row["N"], 20);
    }
}

#[test]
fn simulate_is_deterministic_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "config.json", r#"{"seed": 7, "n_particles": 50}"#);
    let outputs: Vec<Vec<u8>> = [("1", "a.csv"), ("4", "b.csv"), ("4", "c.csv")]
        .iter()
        .map(|(threads, name)| {
            let out = path(dir.path(), name);
            assert!(spintomo(&["simulate", "--config", &config, "--out", &out, "--threads", threads]).status.success());
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    assert!(String::from_utf8_lossy(&outputs[0]).starts_with("a_x,a_y,a_z,N,n_plus,n_minus,x\n"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", r#"{"seed": 99}"#);
    let b = write(dir.path(), "b.json", "{}");
    let from_file = spintomo(&["simulate", "--config", &a]);
    let from_flag = spintomo(&["simulate", "--config", &b, "--seed", "99"]);
    assert_eq!(from_file.stdout, from_flag.stdout);
}

#[test]
fn invalid_config_exits_1_and_names_the_entry() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "config.json", r#"{"directions": [[0,0,1],[1,0,0],[0,0,0]]}"#);
    let out = path(dir.path(), "records.json");
    let run = spintomo(&["simulate", "--config", &config, "--out", &out]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("directions[2]"));
    assert!(!Path::new(&out).exists());

    let unknown = write(dir.path(), "unknown.json", r#"{"particles": 20}"#);
    assert_eq!(spintomo(&["simulate", "--config", &unknown]).status.code(), Some(1));
    let outside = write(dir.path(), "outside.json", r#"{"r_true": [0, 0, 1.5]}"#);
    assert_eq!(spintomo(&["simulate", "--config", &outside]).status.code(), Some(1));
}

#[test]
fn missing_files_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = path(dir.path(), "missing.json");
    assert_eq!(spintomo(&["reconstruct", "--records", &missing]).status.code(), Some(2));
    let config = write(dir.path(), "config.json", "{}");
    let out = path(dir.path(), "no/such/dir/records.json");
    assert_eq!(spintomo(&["simulate", "--config", &config, "--out", &out]).status.code(), Some(2));
}

#[test]
fn malformed_records_exit_1() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"[{"a":[0,0,1],"N":20,"n_plus":15,"n_minus":4,"x":0.5}]"#);
    assert_eq!(spintomo(&["reconstruct", "--records", &bad]).status.code(), Some(1));
}

#[test]
fn noiseless_reconstruction_matches_linear_inversion() {
    let dir = TempDir::new().unwrap();
    let records = axis_records(dir.path(), "noiseless.json", [13, 8, 15], 20);
    let out = json(&spintomo(&["reconstruct", "--records", &records, "--linear"]));
    let r_est = vec3(&out["r_est"]);
    let linear = vec3(&out["linear"]["r"]);
    assert!(distance(r_est, linear) <= 1e-8);
    assert!(distance(r_est, [0.3, -0.2, 0.5]) <= 1e-8);
    assert_eq!(out["converged"], true);
    assert_eq!(out["linear"]["out_of_ball"], false);
}

#[test]
fn positivity_violation_is_flagged_and_repaired() {
    let dir = TempDir::new().unwrap();
    let records = axis_records(dir.path(), "saturated.json", [20, 20, 20], 20);
    let out = json(&spintomo(&["reconstruct", "--records", &records, "--linear"]));
    assert_eq!(out["linear"]["out_of_ball"], true);
    assert!((out["linear"]["norm"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-12);
    assert_eq!(out["boundary"], true);
    let r = vec3(&out["r_est"]);
    assert!(distance(r, [0.0; 3]) <= 1.0);
}

#[test]
fn linear_flag_rejects_non_orthogonal_settings() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "config.json", "{}");
    let records = path(dir.path(), "records.json");
    assert!(spintomo(&["simulate", "--config", &config, "--out", &records]).status.success());
    assert_eq!(spintomo(&["reconstruct", "--records", &records, "--linear"]).status.code(), Some(1));
}

#[test]
fn oracle_comparison_is_within_resolution() {
    let dir = TempDir::new().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{"directions": [[0.3,-0.5,0.8],[-0.9,0.1,0.2],[0.1,0.95,-0.3],[0.6,0.6,0.5],[-0.2,-0.4,-0.9]],
            "r_true": [0.35, -0.4, 0.25], "seed": 11}"#,
    );
    let records = path(dir.path(), "records.csv");
    assert!(spintomo(&["simulate", "--config", &config, "--out", &records]).status.success());
    let out = json(&spintomo(&["reconstruct", "--records", &records, "--oracle", "0.05"]));
    let oracle = &out["oracle"];
    assert!(oracle["distance"].as_f64().unwrap() <= 0.05 * 3f64.sqrt());
    assert!(oracle["log_likelihood_gap"].as_f64().unwrap() >= -1e-9);
    assert_eq!(spintomo(&["reconstruct", "--records", &records, "--oracle", "0.7"]).status.code(), Some(1));
}

#[test]
fn strict_non_convergence_exits_3_without_output() {
    let dir = TempDir::new().unwrap();
    let records = axis_records(dir.path(), "r.json", [17, 3, 11], 20);
    let out = path(dir.path(), "result.json");
    let run = spintomo(&["reconstruct", "--records", &records, "--max-iterations", "1", "--strict", "--out", &out]);
    assert_eq!(run.status.code(), Some(3));
    assert!(!Path::new(&out).exists());
    let relaxed = json(&spintomo(&["reconstruct", "--records", &records, "--max-iterations", "1"]));
    assert_eq!(relaxed["converged"], false);
}

#[test]
fn experiment_writes_three_files() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "config.json", "{}");
    let outdir = dir.path().join("run");
    let outdir_s = outdir.to_string_lossy().into_owned();
    assert!(spintomo(&["experiment", "--config", &config, "--out", &outdir_s]).status.success());
    let mut names: Vec<String> =
        fs::read_dir(&outdir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["bars.csv", "report.json", "states.csv"]);
    let states = fs::read_to_string(outdir.join("states.csv")).unwrap();
    assert_eq!(states.lines().count(), 11);
    let bars = fs::read_to_string(outdir.join("bars.csv")).unwrap();
    assert_eq!(bars.lines().count(), 1 + 10 * 5 * 2);
    let report: Value = serde_json::from_str(&fs::read_to_string(outdir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_repetition"].as_array().unwrap().len(), 10);
}

#[test]
fn experiment_output_is_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "config.json", r#"{"repetitions": 24, "grid_check": 0.1}"#);
    let runs: Vec<Vec<Vec<u8>>> = ["1", "4"]
        .iter()
        .map(|threads| {
            let out = dir.path().join(format!("t{threads}"));
            let out_s = out.to_string_lossy().into_owned();
            assert!(spintomo(&["experiment", "--config", &config, "--out", &out_s, "--threads", threads])
                .status
                .success());
            ["report.json", "bars.csv", "states.csv"].iter().map(|f| fs::read(out.join(f)).unwrap()).collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn experiment_uses_config_output_and_requires_one() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("from-config");
    let config = write(
        dir.path(),
        "config.json",
        &format!(r#"{{"repetitions": 2, "output": {}}}"#, serde_json::to_string(&target).unwrap()),
    );
    assert!(spintomo(&["experiment", "--config", &config]).status.success());
    assert!(target.join("report.json").exists());
    let bare = write(dir.path(), "bare.json", "{}");
    assert_eq!(spintomo(&["experiment", "--config", &bare]).status.code(), Some(1));
}

#[test]
fn diagnose_reports_closure_at_the_estimate_and_fails_at_the_mixed_state() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "config.json", r#"{"r_true": [0.2, 0.1, 0.5], "seed": 3}"#);
    let records = path(dir.path(), "records.json");
    assert!(spintomo(&["simulate", "--config", &config, "--out", &records]).status.success());
    let state = path(dir.path(), "state.json");
    assert!(spintomo(&["reconstruct", "--records", &records, "--out", &state]).status.success());
    let result: Value = serde_json::from_str(&fs::read_to_string(&state).unwrap()).unwrap();
    assert_eq!(result["boundary"], false);

    let at_estimate = json(&spintomo(&["diagnose", "--records", &records, "--state", &state]));
    assert!(at_estimate["closure_defect"].as_f64().unwrap() <= 1e-8);
    assert!(at_estimate["expectation_defect"].as_f64().unwrap() <= 1e-12);
    assert_eq!(at_estimate["rank"], 2);

    let mixed = write(dir.path(), "mixed.json", "[0, 0, 0]");
    let control = json(&spintomo(&["diagnose", "--records", &records, "--state", &mixed]));
    assert!(control["closure_defect"].as_f64().unwrap() > 1e-3);
}

#[test]
fn diagnose_handles_pure_states() {
    let dir = TempDir::new().unwrap();
    let records = axis_records(dir.path(), "saturated.json", [20, 20, 20], 20);
    let state = path(dir.path(), "state.json");
    assert!(spintomo(&["reconstruct", "--records", &records, "--out", &state]).status.success());
    let report = json(&spintomo(&["diagnose", "--records", &records, "--state", &state]));
    assert_eq!(report["rank"], 1);
    assert!(report["closure_defect"].as_f64().unwrap() <= 1e-8);
    let bogus = write(dir.path(), "bogus.json", r#"{"r": [0, 0, 0]}"#);
    assert_eq!(spintomo(&["diagnose", "--records", &records, "--state", &bogus]).status.code(), Some(1));
}
