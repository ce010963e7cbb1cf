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

//! Repeated simulate-and-reconstruct experiments.
//!
//! Repetition `i` simulates its campaign with seed `seed.derive(i)`, so each
//! repetition is independent of the others and of how they are scheduled.
//! Repetitions run on the current rayon pool.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{born_probability, complementary_pair, Direction, Outcome, PolarizationVector};
use crate::error::{Error, Result};
use crate::estimator::{
    grid_oracle, log_likelihood, maxlik_fixed_point, ReconstructionResult, SolverOptions,
};
use crate::simulator::{simulate_campaign, MeasurementRecord, MeasurementSetting, RngSeed};

/// Polar angle of the default analyzer cone.
pub const DEFAULT_POLAR_ANGLE_DEG: f64 = 60.0;
pub const DEFAULT_SEED: u64 = 20;

/// Five analyzers on a cone of half-angle 60° about +z, at azimuths 0°, 72°, …, 288°.
pub fn default_directions() -> Vec<Direction> {
    (0..5)
        .map(|k| {
            Direction::spherical(DEFAULT_POLAR_ANGLE_DEG.to_radians(), (72.0 * k as f64).to_radians())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub directions: Vec<Direction>,
    /// Particles per setting.
    pub n_particles: u64,
    pub r_true: PolarizationVector,
    pub repetitions: usize,
    pub seed: RngSeed,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Lattice spacing for an optional grid-oracle cross-check of every repetition.
    #[serde(default)]
    pub grid_check: Option<f64>,
}

impl ExperimentConfig {
    /// Five settings of 20 particles, north-pole state, ten repetitions.
    pub fn north_pole_default() -> Self {
        ExperimentConfig {
            directions: default_directions(),
            n_particles: 20,
            r_true: PolarizationVector::new([0.0, 0.0, 1.0]).expect("unit vector"),
            repetitions: 10,
            seed: RngSeed(DEFAULT_SEED),
            solver: SolverOptions::default(),
            grid_check: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions.is_empty() {
            return Err(Error::InvalidConfig("at least one direction is required".into()));
        }
        if self.n_particles == 0 {
            return Err(Error::InvalidConfig("n_particles must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if let Some(h) = self.grid_check {
            if !(h > 0.0 && h <= 0.5) {
                return Err(Error::InvalidConfig(format!("grid_check {h} outside (0, 0.5]")));
            }
        }
        self.solver.validate()
    }

    pub fn settings(&self) -> Result<Vec<MeasurementSetting>> {
        self.directions.iter().map(|d| MeasurementSetting::new(*d, self.n_particles)).collect()
    }
}

/// True, counted and reconstructed probability of one analyzer outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarTriple {
    pub setting_index: usize,
    pub outcome: Outcome,
    pub p_true: f64,
    pub p_empirical: f64,
    pub p_reconstructed: f64,
}

/// Up and down bars for one record. Each kind of bar sums to exactly 1 over the pair.
pub fn bar_triples(
    r_true: &PolarizationVector,
    record: &MeasurementRecord,
    r_est: &PolarizationVector,
    setting_index: usize,
) -> [BarTriple; 2] {
    let a = record.direction();
    let empirical = complementary_pair(record.n_plus() as f64 / record.n_particles() as f64);
    Outcome::BOTH.map(|outcome| BarTriple {
        setting_index,
        outcome,
        p_true: born_probability(r_true, a, outcome),
        p_empirical: match outcome {
            Outcome::Up => empirical.0,
            Outcome::Down => empirical.1,
        },
        p_reconstructed: born_probability(r_est, a, outcome),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub resolution: f64,
    pub r_oracle: [f64; 3],
    pub distance: f64,
    /// Log-likelihood of the solver's state minus that of the oracle point.
    pub log_likelihood_gap: f64,
}

/// Compares `result` against [`grid_oracle`] at `resolution`.
///
/// Panics under the same conditions as [`grid_oracle`].
pub fn oracle_check(
    records: &[MeasurementRecord],
    result: &ReconstructionResult,
    resolution: f64,
) -> OracleCheck {
    let r_oracle = grid_oracle(records, resolution);
    let solution = *result.solution().vector();
    OracleCheck {
        resolution,
        r_oracle: [r_oracle.x, r_oracle.y, r_oracle.z],
        distance: (solution - r_oracle).norm(),
        log_likelihood_gap: log_likelihood(&solution, records) - log_likelihood(&r_oracle, records),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionOutcome {
    pub records: Vec<MeasurementRecord>,
    pub reconstruction: ReconstructionResult,
    pub bars: Vec<BarTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub mean_r_est: [f64; 3],
    /// Mean Euclidean distance between `r_est` and the true polarization.
    pub mean_abs_error: f64,
    pub rms_error: f64,
    pub fraction_boundary: f64,
    pub fraction_converged: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub per_repetition: Vec<RepetitionOutcome>,
    pub summary: ExperimentSummary,
}

fn run_repetition(
    config: &ExperimentConfig,
    settings: &[MeasurementSetting],
    index: usize,
) -> Result<RepetitionOutcome> {
    let records = simulate_campaign(&config.r_true, settings, config.seed.derive(index as u64))?;
    let reconstruction = maxlik_fixed_point(&records, &config.solver)?;
    let bars = records
        .iter()
        .enumerate()
        .flat_map(|(j, rec)| bar_triples(&config.r_true, rec, &reconstruction.r_est, j))
        .collect();
    let oracle = config.grid_check.map(|resolution| oracle_check(&records, &reconstruction, resolution));
    Ok(RepetitionOutcome { records, reconstruction, bars, oracle })
}

/// Runs every repetition of `config` and aggregates the results.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let settings = config.settings()?;
    let per_repetition = (0..config.repetitions)
        .into_par_iter()
        .map(|i| run_repetition(config, &settings, i))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&per_repetition, &config.r_true);
    Ok(ExperimentReport { per_repetition, summary })
}

fn summarize(reps: &[RepetitionOutcome], r_true: &PolarizationVector) -> ExperimentSummary {
    let n = reps.len() as f64;
    let mut mean = Vector3::zeros();
    let (mut abs, mut sq, mut boundary, mut converged) = (0.0, 0.0, 0usize, 0usize);
    for rep in reps {
        let r = rep.reconstruction.r_est.vector();
        let err = (r - r_true.vector()).norm();
        mean += r;
        abs += err;
        sq += err * err;
        boundary += rep.reconstruction.boundary as usize;
        converged += rep.reconstruction.converged as usize;
    }
    mean /= n;
    ExperimentSummary {
        mean_r_est: [mean.x, mean.y, mean.z],
        mean_abs_error: abs / n,
        rms_error: (sq / n).sqrt(),
        fraction_boundary: boundary as f64 / n,
        fraction_converged: converged as f64 / n,
    }
}

/// Spread of the data and of the reconstructions over a set of repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionStatistics {
    pub repetitions: usize,
    /// Sample standard deviation of `X_j` for each setting; absent for a single repetition.
    pub std_x: Option<Vec<f64>>,
    pub mean_error: f64,
    pub rms_error: f64,
    pub fraction_boundary: f64,
}

/// Statistics over `reps`, which must all use the same number of settings.
pub fn repetition_statistics(
    reps: &[RepetitionOutcome],
    r_true: &PolarizationVector,
) -> Result<RepetitionStatistics> {
    let first = reps.first().ok_or(Error::Empty("repetitions"))?;
    let m = first.records.len();
    if reps.iter().any(|r| r.records.len() != m) {
        return Err(Error::InvalidConfig("repetitions use different numbers of settings".into()));
    }
    let summary = summarize(reps, r_true);
    let std_x = (reps.len() > 1).then(|| {
        (0..m)
            .map(|j| {
                let xs: Vec<f64> = reps.iter().map(|r| r.records[j].x()).collect();
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
                var.sqrt()
            })
            .collect()
    });
    Ok(RepetitionStatistics {
        repetitions: reps.len(),
        std_x,
        mean_error: summary.mean_abs_error,
        rms_error: summary.rms_error,
        fraction_boundary: summary.fraction_boundary,
    })
}

impl ExperimentReport {
    pub fn statistics(&self, r_true: &PolarizationVector) -> Result<RepetitionStatistics> {
        repetition_statistics(&self.per_repetition, r_true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_directions_lie_on_the_cone() {
        let dirs = default_directions();
        assert_eq!(dirs.len(), 5);
        for d in &dirs {
            assert!((d.vector().z - 0.5).abs() < 1e-15);
            assert!((d.vector().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn north_pole_protocol() {
        let config = ExperimentConfig::north_pole_default();
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.per_repetition.len(), 10);
        let mut mean_z = 0.0;
        for rep in &report.per_repetition {
            assert!(rep.reconstruction.r_est.norm() <= 1.0);
            assert_eq!(rep.records.len(), 5);
            assert!(rep.records.iter().all(|r| r.n_plus() + r.n_minus() == 20));
            mean_z += rep.reconstruction.r_est.vector().z / 10.0;
        }
        assert!(mean_z > 0.8, "mean r3 = {mean_z}");
        assert!((report.summary.mean_r_est[2] - mean_z).abs() < 1e-12);
    }

    #[test]
    fn large_sample_recovers_the_state() {
        let config = ExperimentConfig {
            directions: vec![Direction::x(), Direction::y(), Direction::z()],
            n_particles: 1_000_000,
            r_true: PolarizationVector::new([0.3, -0.2, 0.5]).unwrap(),
            repetitions: 1,
            seed: RngSeed(3),
            solver: SolverOptions::default(),
            grid_check: None,
        };
        let report = run_experiment(&config).unwrap();
        let r = report.per_repetition[0].reconstruction.r_est;
        assert!((r.vector() - config.r_true.vector()).norm() <= 0.01);
    }

    #[test]
    fn unbiased_data_reconstruct_the_origin() {
        let records: Vec<_> = default_directions()
            .into_iter()
            .map(|d| MeasurementRecord::from_counts(d, 10, 10).unwrap())
            .collect();
        let result = maxlik_fixed_point(&records, &SolverOptions::default()).unwrap();
        assert_eq!(result.r_est.to_array(), [0.0, 0.0, 0.0]);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn bars() {
        let north = PolarizationVector::new([0.0, 0.0, 1.0]).unwrap();
        let rec = MeasurementRecord::from_counts(Direction::z(), 18, 2).unwrap();
        let r_est = PolarizationVector::new([0.0, 0.1, 0.8]).unwrap();
        let [up, down] = bar_triples(&north, &rec, &r_est, 3);
        assert_eq!((up.p_true, down.p_true), (1.0, 0.0));
        assert_eq!((up.p_empirical, down.p_empirical), (0.9, 1.0 - 0.9));
        assert!((up.p_reconstructed - 0.9).abs() < 1e-15);
        assert_eq!(up.setting_index, 3);
        for pair in [(up.p_true, down.p_true), (up.p_empirical, down.p_empirical), (up.p_reconstructed, down.p_reconstructed)] {
            assert_eq!(pair.0 + pair.1, 1.0);
        }

        let rec = MeasurementRecord::from_counts(Direction::z(), 14, 6).unwrap();
        let r = PolarizationVector::new([0.0, 0.0, 0.4]).unwrap();
        let [up, down] = bar_triples(&r, &rec, &r, 0);
        assert_eq!(up.p_true, up.p_empirical);
        assert_eq!(up.p_true, up.p_reconstructed);
        assert_eq!(down.p_true, down.p_reconstructed);
    }

    #[test]
    fn statistics_for_one_repetition_have_no_spread() {
        let config = ExperimentConfig { repetitions: 1, ..ExperimentConfig::north_pole_default() };
        let report = run_experiment(&config).unwrap();
        let stats = report.statistics(&config.r_true).unwrap();
        assert_eq!(stats.std_x, None);
        assert!(repetition_statistics(&[], &config.r_true).is_err());
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let config = ExperimentConfig { grid_check: Some(0.25), ..ExperimentConfig::north_pole_default() };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.statistics(&config.r_true).unwrap(), b.statistics(&config.r_true).unwrap());
        assert!(a.per_repetition.iter().all(|r| r.oracle.is_some()));
    }

    #[test]
    fn invalid_configs() {
        let base = ExperimentConfig::north_pole_default();
        for bad in [
            ExperimentConfig { directions: vec![], ..base.clone() },
            ExperimentConfig { repetitions: 0, ..base.clone() },
            ExperimentConfig { n_particles: 0, ..base.clone() },
            ExperimentConfig { grid_check: Some(0.0), ..base.clone() },
        ] {
            assert!(run_experiment(&bad).is_err());
        }
    }
}
