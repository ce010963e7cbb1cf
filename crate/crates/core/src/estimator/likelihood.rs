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

//! Likelihood of count data as a function of the polarization vector, and
//! the `R(r)`, `K(r)` functions that drive the fixed-point iteration.
//!
//! Settings are weighted by `w_j = N_j / ΣN`. With equal particle numbers this
//! is the usual `1/M`.

use std::f64::consts::LN_2;

use nalgebra::Vector3;

use crate::algebra::Outcome;
use crate::error::{Error, Result};
use crate::simulator::MeasurementRecord;

/// Total number of particles over all records.
pub fn total_particles(records: &[MeasurementRecord]) -> u64 {
    records.iter().map(|r| r.n_particles()).sum()
}

/// Per-setting weights `N_j / ΣN`.
pub fn setting_weights(records: &[MeasurementRecord]) -> Vec<f64> {
    let total = total_particles(records) as f64;
    records.iter().map(|r| r.n_particles() as f64 / total).collect()
}

fn projection(r: &Vector3<f64>, record: &MeasurementRecord, index: usize) -> Result<f64> {
    let u = record.direction().dot(r);
    if !(u.abs() < 1.0) {
        return Err(Error::SingularDenominator(u.abs(), index));
    }
    Ok(u)
}

/// `ln L = Σ_j n₊ ln ½(1 + a·r) + n₋ ln ½(1 − a·r)`, the log-probability of the
/// observed counts. Terms with zero count contribute nothing; a positive count
/// on an outcome of probability zero gives `−∞`.
pub fn log_likelihood(r: &Vector3<f64>, records: &[MeasurementRecord]) -> f64 {
    polarization_log_likelihood(r, records) - total_particles(records) as f64 * LN_2
}

/// `Σ_j n₊ ln(1 + a·r) + n₋ ln(1 − a·r)`: the log-likelihood without the constant
/// `−ΣN ln 2`. Zero at `r = 0`.
pub fn polarization_log_likelihood(r: &Vector3<f64>, records: &[MeasurementRecord]) -> f64 {
    let mut total = 0.0;
    for record in records {
        let u = record.direction().dot(r);
        for outcome in Outcome::BOTH {
            let n = record.count(outcome);
            if n == 0 {
                continue;
            }
            let base = outcome.sign() * u;
            if base <= -1.0 {
                return f64::NEG_INFINITY;
            }
            total += n as f64 * base.ln_1p();
        }
    }
    total
}

/// `ln L(to) − ln L(from)`, evaluated term by term with `ln_1p` so that the
/// sign stays reliable for very short steps.
pub fn log_likelihood_increment(
    from: &Vector3<f64>,
    to: &Vector3<f64>,
    records: &[MeasurementRecord],
) -> f64 {
    let step = to - from;
    let mut total = 0.0;
    for record in records {
        let u = record.direction().dot(from);
        let du = record.direction().dot(&step);
        for outcome in Outcome::BOTH {
            let n = record.count(outcome);
            if n == 0 {
                continue;
            }
            let s = outcome.sign();
            let base = 1.0 + s * u;
            if base <= 0.0 {
                return f64::NAN;
            }
            let ratio = s * du / base;
            if ratio <= -1.0 {
                return f64::NEG_INFINITY;
            }
            total += n as f64 * ratio.ln_1p();
        }
    }
    total
}

/// `R(r) = Σ_j w_j/2 [(1 + X_j)/(1 + a_j·r) + (1 − X_j)/(1 − a_j·r)]`.
pub fn compute_r(r: &Vector3<f64>, records: &[MeasurementRecord]) -> Result<f64> {
    Ok(compute_r_k(r, records)?.0)
}

/// `K(r) = Σ_j w_j/2 [(1 + X_j)/(1 + a_j·r) − (1 − X_j)/(1 − a_j·r)] a_j`.
pub fn compute_k(r: &Vector3<f64>, records: &[MeasurementRecord]) -> Result<Vector3<f64>> {
    Ok(compute_r_k(r, records)?.1)
}

/// `R(r)` and `K(r)` in one pass.
pub fn compute_r_k(r: &Vector3<f64>, records: &[MeasurementRecord]) -> Result<(f64, Vector3<f64>)> {
    if records.is_empty() {
        return Err(Error::Empty("measurement records"));
    }
    let total = total_particles(records) as f64;
    let mut big_r = 0.0;
    let mut big_k = Vector3::zeros();
    for (j, record) in records.iter().enumerate() {
        let u = projection(r, record, j)?;
        let half_w = 0.5 * record.n_particles() as f64 / total;
        let up = (1.0 + record.x()) / (1.0 + u);
        let down = (1.0 - record.x()) / (1.0 - u);
        big_r += half_w * (up + down);
        big_k += record.direction().vector() * (half_w * (up - down));
    }
    Ok((big_r, big_k))
}

/// `Σ_j (X_j − a_j·r)/(1 − (a_j·r)²) a_j`, which vanishes at interior
/// likelihood maxima. Equals `M·K(r)` when all settings use the same `N`.
pub fn gradient_residual(r: &Vector3<f64>, records: &[MeasurementRecord]) -> Result<Vector3<f64>> {
    let mut g = Vector3::zeros();
    for (j, record) in records.iter().enumerate() {
        let u = projection(r, record, j)?;
        g += record.direction().vector() * ((record.x() - u) / (1.0 - u * u));
    }
    Ok(g)
}

/// Analytic gradient of [`log_likelihood`]: `Σ_j N_j (X_j − u_j)/(1 − u_j²) a_j`.
pub fn log_likelihood_gradient(
    r: &Vector3<f64>,
    records: &[MeasurementRecord],
) -> Result<Vector3<f64>> {
    Ok(compute_k(r, records)? * total_particles(records) as f64)
}
