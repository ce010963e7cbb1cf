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

//! State reconstruction from Stern-Gerlach counts.

mod fixed_point;
mod grid;
mod likelihood;
mod linear;

pub use fixed_point::{
    maxlik_fixed_point, maxlik_fixed_point_traced, ReconstructionResult, SolverOptions, SolverTrace,
};
pub use grid::grid_oracle;
pub use likelihood::{
    compute_k, compute_r, compute_r_k, gradient_residual, log_likelihood, log_likelihood_gradient,
    log_likelihood_increment, polarization_log_likelihood, setting_weights, total_particles,
};
pub use linear::{linear_inversion, LinearEstimate, FRAME_EPS};

use crate::algebra::{projector_from_direction, DensityMatrix, Outcome};
use crate::simulator::MeasurementRecord;

/// How far `ρ` is from reproducing every observed frequency directly:
/// `max_{j,±} |Tr{ρ P_{±a_j}}/M − (1 ± X_j)/(2M)|`.
///
/// With more independent settings than the three parameters of the state,
/// noisy data generally leave this strictly positive for every `ρ`.
pub fn overcompleteness_defect(records: &[MeasurementRecord], rho: &DensityMatrix) -> f64 {
    let m = records.len() as f64;
    records
        .iter()
        .flat_map(|rec| {
            Outcome::BOTH.map(|o| {
                let p = rho.expectation(projector_from_direction(rec.direction(), o).matrix());
                (p / m - (1.0 + o.sign() * rec.x()) / (2.0 * m)).abs()
            })
        })
        .fold(0.0, f64::max)
}
