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

//! Direct inversion of counts on three orthogonal analyzers.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::MeasurementRecord;

/// Orthogonality tolerance for the three analyzer directions.
pub const FRAME_EPS: f64 = 1e-9;

/// Unconstrained estimate `Σ_i X_i a_i`. Nothing keeps it inside the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearEstimate {
    pub r: [f64; 3],
    pub norm: f64,
    pub out_of_ball: bool,
}

impl LinearEstimate {
    pub fn vector(&self) -> Vector3<f64> {
        Vector3::from(self.r)
    }
}

pub fn linear_inversion(records: &[MeasurementRecord]) -> Result<LinearEstimate> {
    if records.len() != 3 {
        return Err(Error::InvalidFrame(format!("need exactly 3 records, got {}", records.len())));
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let c = records[i].direction().vector().dot(records[j].direction().vector());
            if c.abs() > FRAME_EPS {
                return Err(Error::InvalidFrame(format!(
                    "directions {i} and {j} are not orthogonal (cosine {c:e})"
                )));
            }
        }
    }
    let r: Vector3<f64> = records.iter().map(|rec| rec.direction().vector() * rec.x()).sum();
    let norm = r.norm();
    Ok(LinearEstimate { r: [r.x, r.y, r.z], norm, out_of_ball: norm > 1.0 })
}
