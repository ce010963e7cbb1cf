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


//! `spintomo` command-line driver.
//!
//! Exit codes: 0 success, 1 invalid input (config, records, state or flags),
//! 2 I/O failure, 3 non-convergence under `--strict`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spintomo::algebra::{density_from_polarization, PolarizationVector};
use spintomo::estimator::{linear_inversion, maxlik_fixed_point, LinearEstimate, ReconstructionResult, SolverOptions};
use spintomo::harness::{oracle_check, run_experiment, OracleCheck};
use spintomo::io::{bars_csv, records_from_str_for_path, records_to_string_for_path, report_json, states_csv};
use spintomo::pom::diagnose;
use spintomo::simulator::{simulate_campaign, MeasurementRecord};

use crate::config::load_config;

#[derive(Debug, Parser)]
#[command(name = "spintomo", version, about = "Spin-1/2 polarization tomography from Stern-Gerlach counts")]
struct Cli {
    /// Worker threads for parallel work (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one measurement campaign and write its records.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output file; `.csv` selects CSV, anything else JSON. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Maximum-likelihood reconstruction from a records file.
    Reconstruct {
        /// Records in JSON, or CSV when the name ends in `.csv`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the grid oracle at this lattice spacing.
        #[arg(long, value_name = "RESOLUTION")]
        oracle: Option<f64>,
        /// Also run linear inversion (needs exactly three orthogonal settings).
        #[arg(long)]
        linear: bool,
        /// Exit with code 3 and write nothing if the solver does not converge.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a repeated experiment and write report.json, bars.csv and states.csv.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with code 3 and write nothing if any repetition fails to converge.
        #[arg(long)]
        strict: bool,
    },
    /// Closure and expectation defects of the renormalized measurement at a state.
    Diagnose {
        #[arg(long)]
        records: PathBuf,
        /// A reconstruct output, or a bare `[r1, r2, r3]`.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long)]
    tol_k: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    damping_min: Option<f64>,
    #[arg(long)]
    ball_margin: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, Failure> {
        let d = SolverOptions::default();
        let opts = SolverOptions {
            tol_k: self.tol_k.unwrap_or(d.tol_k),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            damping_min: self.damping_min.unwrap_or(d.damping_min),
            ball_margin: self.ball_margin.unwrap_or(d.ball_margin),
        };
        opts.validate().map_err(invalid)?;
        Ok(opts)
    }
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Io(String),
    NotConverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
            Failure::NotConverged(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Io(m) | Failure::NotConverged(m) => m,
        }
    }
}

pub fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))
}

fn read_records(path: &Path) -> Result<Vec<MeasurementRecord>, Failure> {
    let text = read_file(path)?;
    records_from_str_for_path(path, &text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Writes via a sibling temporary file so a failed run never leaves a truncated output.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let tmp = temp_path(path);
    fs::write(&tmp, contents).map_err(|e| Failure::Io(format!("writing {}: {e}", tmp.display())))?;
    commit(&tmp, path)
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp"))
}

fn commit(tmp: &Path, path: &Path) -> Result<(), Failure> {
    fs::rename(tmp, path).map_err(|e| {
        let _ = fs::remove_file(tmp);
        Failure::Io(format!("writing {}: {e}", path.display()))
    })
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

#[derive(Serialize)]
struct ReconstructOutput {
    #[serde(flatten)]
    result: ReconstructionResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    linear: Option<LinearEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

fn simulate(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<(), Failure> {
    let loaded = load_config(config, seed)?;
    let settings = loaded.experiment.settings().map_err(invalid)?;
    // Same campaign as repetition 0 of an experiment with this config.
    let records = simulate_campaign(&loaded.experiment.r_true, &settings, loaded.experiment.seed.derive(0))
        .map_err(invalid)?;
    let out = out.or(loaded.output.as_deref());
    let text = records_to_string_for_path(out.unwrap_or(Path::new("-")), &records);
    emit(out, &text)
}

fn reconstruct(
    records: &Path,
    out: Option<&Path>,
    oracle: Option<f64>,
    linear: bool,
    strict: bool,
    solver: &SolverArgs,
) -> Result<(), Failure> {
    let opts = solver.options()?;
    if let Some(h) = oracle {
        if !(h > 0.0 && h <= 0.5) {
            return Err(Failure::Invalid(format!("--oracle {h} outside (0, 0.5]")));
        }
    }
    let records = read_records(records)?;
    let linear = linear.then(|| linear_inversion(&records)).transpose().map_err(invalid)?;
    let result = maxlik_fixed_point(&records, &opts).map_err(invalid)?;
    if strict && !result.converged {
        return Err(Failure::NotConverged(format!(
            "solver stopped after {} iterations with residual {:e}",
            result.iterations, result.k_residual
        )));
    }
    let oracle = oracle.map(|h| oracle_check(&records, &result, h));
    emit(out, &to_json(&ReconstructOutput { result, linear, oracle }))
}

fn experiment(config: &Path, out: Option<&Path>, seed: Option<u64>, strict: bool) -> Result<(), Failure> {
    let loaded = load_config(config, seed)?;
    let dir = out
        .map(Path::to_path_buf)
        .or(loaded.output)
        .ok_or_else(|| Failure::Invalid("no output directory: pass --out or set `output`".into()))?;
    let report = run_experiment(&loaded.experiment).map_err(invalid)?;
    let stalled = report.per_repetition.iter().filter(|r| !r.reconstruction.converged).count();
    if strict && stalled > 0 {
        return Err(Failure::NotConverged(format!("{stalled} repetitions did not converge")));
    }
    let files = [
        ("report.json", report_json(&report)),
        ("bars.csv", bars_csv(&report)),
        ("states.csv", states_csv(&report)),
    ];
    fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("creating {}: {e}", dir.display())))?;
    let mut staged = Vec::new();
    for (name, contents) in &files {
        let path = dir.join(name);
        let tmp = temp_path(&path);
        if let Err(e) = fs::write(&tmp, contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(Failure::Io(format!("writing {}: {e}", tmp.display())));
        }
        staged.push((tmp, path));
    }
    for (tmp, path) in &staged {
        commit(tmp, path)?;
    }
    Ok(())
}

fn read_state(path: &Path) -> Result<PolarizationVector, Failure> {
    let text = read_file(path)?;
    let bad = |m: String| Failure::Invalid(format!("{}: {m}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let (r, boundary) = match &value {
        serde_json::Value::Array(_) => (value.clone(), false),
        serde_json::Value::Object(map) => {
            let r = map.get("r_est").cloned().ok_or_else(|| bad("missing `r_est`".into()))?;
            let boundary = match map.get("boundary") {
                None => false,
                Some(b) => b.as_bool().ok_or_else(|| bad("`boundary` must be a boolean".into()))?,
            };
            (r, boundary)
        }
        _ => return Err(bad("expected an object with `r_est` or a 3-element array".into())),
    };
    let r: PolarizationVector = serde_json::from_value(r).map_err(|e| bad(e.to_string()))?;
    // A boundary result stands for the pure state along r_est.
    match (boundary, r.unit()) {
        (true, Some(u)) => PolarizationVector::from_vector(u).map_err(|e| bad(e.to_string())),
        _ => Ok(r),
    }
}

fn diagnose_cmd(records: &Path, state: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let records = read_records(records)?;
    let state = read_state(state)?;
    let report = diagnose(&records, &density_from_polarization(&state)).map_err(invalid)?;
    emit(out, &to_json(&report))
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, out, seed } => simulate(&config, out.as_deref(), seed),
        Command::Reconstruct { records, out, oracle, linear, strict, solver } => {
            reconstruct(&records, out.as_deref(), oracle, linear, strict, &solver)
        }
        Command::Experiment { config, out, seed, strict } => experiment(&config, out.as_deref(), seed, strict),
        Command::Diagnose { records, state, out } => diagnose_cmd(&records, &state, out.as_deref()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.threads {
        None => dispatch(cli.command),
        Some(0) => Err(Failure::Invalid("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(invalid)?;
            pool.install(|| dispatch(cli.command))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("spintomo: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
