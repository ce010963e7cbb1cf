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


//! Config file for `simulate` and `experiment`.
//!
//! Every key is optional and defaults to the north-pole run: five analyzers on
//! the 60° cone, 20 particles each, ten repetitions, seed 20. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use spintomo::algebra::{Direction, PolarizationVector};
use spintomo::estimator::SolverOptions;
use spintomo::harness::ExperimentConfig;
use spintomo::simulator::RngSeed;

use crate::{read_file, Failure};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    directions: Option<Vec<[f64; 3]>>,
    n_particles: Option<u64>,
    r_true: Option<[f64; 3]>,
    repetitions: Option<usize>,
    seed: Option<u64>,
    solver: Option<SolverOptions>,
    grid_check: Option<f64>,
    output: Option<PathBuf>,
}

#[derive(Debug)]
pub struct LoadedConfig {
    pub experiment: ExperimentConfig,
    pub output: Option<PathBuf>,
}

/// Reads and validates `path`; `seed` overrides the file's seed.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<LoadedConfig, Failure> {
    let text = read_file(path)?;
    let bad = |m: String| Failure::Invalid(format!("{}: {m}", path.display()));
    let file: ConfigFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let mut experiment = ExperimentConfig::north_pole_default();
    if let Some(dirs) = file.directions {
        experiment.directions = dirs
            .into_iter()
            .enumerate()
            .map(|(i, a)| Direction::new(a).map_err(|e| bad(format!("directions[{i}]: {e}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(r) = file.r_true {
        experiment.r_true = PolarizationVector::new(r).map_err(|e| bad(format!("r_true: {e}")))?;
    }
    if let Some(n) = file.n_particles {
        experiment.n_particles = n;
    }
    if let Some(n) = file.repetitions {
        experiment.repetitions = n;
    }
    if let Some(s) = seed.or(file.seed) {
        experiment.seed = RngSeed(s);
    }
    if let Some(s) = file.solver {
        experiment.solver = s;
    }
    experiment.grid_check = file.grid_check;
    experiment.validate().map_err(|e| bad(e.to_string()))?;
    Ok(LoadedConfig { experiment, output: file.output })
}
