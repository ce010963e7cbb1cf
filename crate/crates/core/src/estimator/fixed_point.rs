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

//! Maximum-likelihood reconstruction by the fixed-point iteration
//! `r ← R(r)·r + K(r)`, started at the centre of the ball.
//!
//! Each step moves along `d = R(r)·r + K(r) − r` with a backtracked length
//! `λ ∈ (damping_min, 1]`. A trial point beyond radius `1 − ε_b` is pulled back
//! radially onto that sphere, and a step is accepted only if the
//! log-likelihood does not decrease. Since `R(r) = 1 − r·K(r)`, the direction
//! is `d = K − (r·K) r`, whose inner product with the gradient is at least
//! `|K|²(1 − |r|²)`, so short steps always ascend inside the ball.
//!
//! The radial part of `d` carries the factor `1 − |r|²`, which makes the plain
//! iteration crawl when the maximum is on or just inside the sphere. Two
//! moves compensate, both checked against the likelihood like any other step:
//! a full step that ascends is extended by doubling `λ` while the likelihood
//! keeps rising, and an iterate whose `K` still points outward at the sphere
//! along `r̂` jumps there directly.
//!
//! Interior maxima satisfy `K = 0`. On the unit sphere the fixed points have
//! `K ∥ r` instead, and convergence there is judged by the tangential part of
//! `K` together with `K·r̂ ≥ −tol`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::algebra::PolarizationVector;
use crate::error::{Error, Result};
use crate::simulator::MeasurementRecord;

use super::likelihood::{compute_r_k, log_likelihood, log_likelihood_increment, total_particles};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Convergence threshold on `|K|` (or its tangential part on the sphere).
    pub tol_k: f64,
    pub max_iterations: usize,
    /// Smallest step length tried by the backtracking search.
    pub damping_min: f64,
    /// Iterates are kept within radius `1 − ball_margin`.
    pub ball_margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol_k: 1e-10, max_iterations: 10_000, damping_min: 1e-6, ball_margin: 1e-9 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidOptions(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tol_k", self.tol_k)?;
        positive("damping_min", self.damping_min)?;
        positive("ball_margin", self.ball_margin)?;
        if self.damping_min > 1.0 {
            return Err(Error::InvalidOptions("damping_min must not exceed 1".into()));
        }
        if self.ball_margin >= 0.5 {
            return Err(Error::InvalidOptions("ball_margin must be below 0.5".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidOptions("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of [`maxlik_fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// Last iterate. Within `ball_margin` of the sphere when `boundary` is set.
    pub r_est: PolarizationVector,
    /// Number of accepted steps.
    pub iterations: usize,
    pub converged: bool,
    /// The maximum lies on the unit sphere (a pure state).
    pub boundary: bool,
    /// [`log_likelihood`] at `r_est`.
    pub log_likelihood: f64,
    /// `|K(r_est)|`, or its component tangential to `r_est` when `boundary`.
    pub k_residual: f64,
    /// `R(r_est)`.
    pub r_value: f64,
}

impl ReconstructionResult {
    /// The state the result stands for: `r_est` itself, or its unit vector when
    /// the maximum sits on the sphere.
    pub fn solution(&self) -> PolarizationVector {
        match (self.boundary, self.r_est.unit()) {
            (true, Some(unit)) => PolarizationVector::from_vector(unit).expect("unit vector"),
            _ => self.r_est,
        }
    }
}

/// Per-step record of a solver run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    /// Iterates, starting with the origin.
    pub iterates: Vec<Vector3<f64>>,
    /// Log-likelihood at each iterate.
    pub log_likelihoods: Vec<f64>,
    /// Log-likelihood gain of each accepted step, computed from the step itself.
    pub increments: Vec<f64>,
    /// Accepted step lengths `λ`; zero marks a radial jump onto the sphere.
    pub step_lengths: Vec<f64>,
    /// Largest loss each step was allowed: zero, or a rounding allowance of a
    /// few ulps of the radial derivative for steps pulled back onto the sphere.
    pub loss_allowances: Vec<f64>,
}

/// Reconstructs the polarization from count records.
pub fn maxlik_fixed_point(
    records: &[MeasurementRecord],
    opts: &SolverOptions,
) -> Result<ReconstructionResult> {
    maxlik_fixed_point_traced(records, opts).map(|(result, _)| result)
}

struct Status {
    converged: bool,
    boundary: bool,
    k_residual: f64,
}

fn status(r: &Vector3<f64>, k: &Vector3<f64>, opts: &SolverOptions) -> Status {
    let k_norm = k.norm();
    if k_norm <= opts.tol_k {
        return Status { converged: true, boundary: false, k_residual: k_norm };
    }
    let radius = r.norm();
    if radius >= 1.0 - 2.0 * opts.ball_margin {
        let r_hat = r / radius;
        let radial = k.dot(&r_hat);
        let tangential = (k - r_hat * radial).norm();
        let converged = tangential <= opts.tol_k && radial >= -opts.tol_k;
        return Status { converged, boundary: true, k_residual: tangential };
    }
    Status { converged: false, boundary: false, k_residual: k_norm }
}

struct Step {
    point: Vector3<f64>,
    gain: f64,
    /// Step multiple `λ`; zero for a radial jump onto the sphere.
    length: f64,
    allowance: f64,
}

/// Largest step multiple tried when extending a full step.
const MAX_EXTENSION: f64 = 1024.0;

/// Rounding allowance for trial points pulled back onto the sphere: the
/// rescaling moves the point radially by a few ulps, which changes the
/// log-likelihood by up to `ΣN·|K|` times that.
fn projection_allowance(k: &Vector3<f64>, records: &[MeasurementRecord]) -> f64 {
    16.0 * f64::EPSILON * total_particles(records) as f64 * k.norm()
}

fn next_step(
    r: &Vector3<f64>,
    big_r: f64,
    k: &Vector3<f64>,
    records: &[MeasurementRecord],
    opts: &SolverOptions,
) -> Result<Option<Step>> {
    let max_radius = 1.0 - opts.ball_margin;
    if let Some(jump) = radial_jump(r, k, records, opts)? {
        return Ok(Some(jump));
    }

    let direction = r * big_r + k - r;
    let allowance = projection_allowance(k, records);
    let mut lambda = 1.0;
    while lambda >= opts.damping_min {
        let mut trial = r + direction * lambda;
        let trial_radius = trial.norm();
        let projected = trial_radius > max_radius;
        if projected {
            trial *= max_radius / trial_radius;
        }
        let allowed = if projected { allowance } else { 0.0 };
        let gain = log_likelihood_increment(r, &trial, records);
        if gain >= -allowed && trial != *r {
            let step = Step { point: trial, gain, length: lambda, allowance: allowed };
            if lambda == 1.0 && !projected {
                return Ok(Some(extend(r, &direction, step, records, max_radius)));
            }
            return Ok(Some(step));
        }
        lambda *= 0.5;
    }
    Ok(None)
}

/// Jumps along `r̂` onto the sphere of radius `1 − ε_b` when `K` there still
/// points outward. The log-likelihood is concave, so the maximum along the ray
/// is then on the sphere and the jump cannot lose likelihood.
fn radial_jump(
    r: &Vector3<f64>,
    k: &Vector3<f64>,
    records: &[MeasurementRecord],
    opts: &SolverOptions,
) -> Result<Option<Step>> {
    let radius = r.norm();
    if radius == 0.0 || radius >= 1.0 - 2.0 * opts.ball_margin || k.dot(r) <= 0.0 {
        return Ok(None);
    }
    let shell = r * ((1.0 - opts.ball_margin) / radius);
    if compute_r_k(&shell, records)?.1.dot(&shell) < 0.0 {
        return Ok(None);
    }
    let gain = log_likelihood_increment(r, &shell, records);
    Ok((gain >= 0.0).then_some(Step { point: shell, gain, length: 0.0, allowance: 0.0 }))
}

/// Doubles an accepted full step while the log-likelihood keeps rising and the
/// point stays inside the ball.
fn extend(
    r: &Vector3<f64>,
    direction: &Vector3<f64>,
    mut best: Step,
    records: &[MeasurementRecord],
    max_radius: f64,
) -> Step {
    let mut lambda = 2.0;
    while lambda <= MAX_EXTENSION {
        let trial = r + direction * lambda;
        if trial.norm() > max_radius {
            break;
        }
        let gain = log_likelihood_increment(r, &trial, records);
        if !(gain > best.gain) {
            break;
        }
        best = Step { point: trial, gain, length: lambda, allowance: 0.0 };
        lambda *= 2.0;
    }
    best
}

/// [`maxlik_fixed_point`] that also returns the iterate history.
pub fn maxlik_fixed_point_traced(
    records: &[MeasurementRecord],
    opts: &SolverOptions,
) -> Result<(ReconstructionResult, SolverTrace)> {
    if records.is_empty() {
        return Err(Error::Empty("measurement records"));
    }
    opts.validate()?;

    let mut r = Vector3::zeros();
    let mut ll = log_likelihood(&r, records);
    let mut trace = SolverTrace {
        iterates: vec![r],
        log_likelihoods: vec![ll],
        ..SolverTrace::default()
    };
    let mut iterations = 0;

    let (mut big_r, mut k) = compute_r_k(&r, records)?;
    let mut state = status(&r, &k, opts);
    while !state.converged && iterations < opts.max_iterations {
        let Some(step) = next_step(&r, big_r, &k, records, opts)? else {
            break;
        };
        r = step.point;
        ll = log_likelihood(&r, records);
        iterations += 1;
        trace.iterates.push(r);
        trace.log_likelihoods.push(ll);
        trace.increments.push(step.gain);
        trace.step_lengths.push(step.length);
        trace.loss_allowances.push(step.allowance);
        (big_r, k) = compute_r_k(&r, records)?;
        state = status(&r, &k, opts);
    }

    let result = ReconstructionResult {
        r_est: PolarizationVector::from_vector(r)?,
        iterations,
        converged: state.converged,
        boundary: state.boundary,
        log_likelihood: ll,
        k_residual: state.k_residual,
        r_value: big_r,
    };
    Ok((result, trace))
}
