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

//! Exhaustive lattice search for the likelihood maximum, used to cross-check
//! the fixed-point solver.

use std::cmp::Ordering;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::simulator::MeasurementRecord;

use super::likelihood::log_likelihood;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    point: Vector3<f64>,
    log_likelihood: f64,
    norm: f64,
}

impl Candidate {
    fn new(point: Vector3<f64>, records: &[MeasurementRecord]) -> Self {
        Candidate { point, log_likelihood: log_likelihood(&point, records), norm: point.norm() }
    }

    /// Total order: higher likelihood, then smaller norm, then lexicographically smaller.
    fn better_than(&self, other: &Candidate) -> bool {
        match self.log_likelihood.total_cmp(&other.log_likelihood) {
            Ordering::Greater => return true,
            Ordering::Less => return false,
            Ordering::Equal => {}
        }
        match self.norm.total_cmp(&other.norm) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
        let lex = self
            .point
            .iter()
            .zip(other.point.iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal);
        lex == Some(Ordering::Less)
    }

    fn best(self, other: Candidate) -> Candidate {
        if other.better_than(&self) {
            other
        } else {
            self
        }
    }
}

/// Argmax of the log-likelihood over the cubic lattice of spacing
/// `resolution` inside `[-1, 1]³`. Lattice points outside the unit ball are
/// projected radially onto the sphere. Ties go to the smallest norm, then to
/// the lexicographically smallest point.
///
/// # Panics
///
/// If `resolution` is not in `(0, 0.5]` or `records` is empty.
pub fn grid_oracle(records: &[MeasurementRecord], resolution: f64) -> Vector3<f64> {
    assert!(resolution > 0.0 && resolution <= 0.5, "resolution must lie in (0, 0.5]");
    assert!(!records.is_empty(), "grid oracle needs at least one record");
    let steps = (1.0 / resolution + 1e-9).floor() as i64;
    let coord = |i: i64| i as f64 * resolution;
    (-steps..=steps)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<Candidate> = None;
            for j in -steps..=steps {
                for k in -steps..=steps {
                    let mut p = Vector3::new(coord(i), coord(j), coord(k));
                    let n = p.norm();
                    if n > 1.0 {
                        p /= n;
                    }
                    let c = Candidate::new(p, records);
                    best = Some(match best {
                        Some(b) => b.best(c),
                        None => c,
                    });
                }
            }
            best.expect("non-empty lattice row")
        })
        .reduce_with(Candidate::best)
        .expect("non-empty lattice")
        .point
}
