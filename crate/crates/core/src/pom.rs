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

//! Renormalized analyzer projectors at the reconstructed state.
//!
//! Rescaling each projector `P_{±a_j}` by `w_j(1 ± X_j) / (2 Tr{ρ_e P_{±a_j}})`
//! gives a set of positive operators that sum to the identity exactly when
//! `ρ_e` is an extremum of the likelihood, and whose expectation values in
//! `ρ_e` are the observed frequencies by construction. For a pure `ρ_e` the
//! sum is only required to act as the identity on the ray of `ρ_e`.

use serde::{Deserialize, Serialize};

use crate::algebra::{
    hermitian_eigenvalues, identity, max_entry_norm, projector_from_direction, DensityMatrix, Mat2,
    Outcome,
};
use crate::error::{Error, Result};
use crate::estimator::setting_weights;
use crate::simulator::MeasurementRecord;

/// Renormalization denominators at or below this are treated as zero.
pub const POM_DENOMINATOR_EPS: f64 = 1e-12;
/// Eigenvalue threshold below which `ρ_e` counts as rank one.
pub const RANK_EPS: f64 = 1e-9;

/// One rescaled projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormalizedElement {
    pub op: Mat2,
    pub setting_index: usize,
    pub outcome: Outcome,
}

/// Builds the renormalized measurement at `rho_e`, two elements per record.
pub fn build_renormalized_pom(
    records: &[MeasurementRecord],
    rho_e: &DensityMatrix,
) -> Result<Vec<RenormalizedElement>> {
    let weights = setting_weights(records);
    let mut elements = Vec::with_capacity(2 * records.len());
    for (j, (rec, w)) in records.iter().zip(weights).enumerate() {
        for outcome in Outcome::BOTH {
            let projector = projector_from_direction(rec.direction(), outcome);
            let denominator = rho_e.expectation(projector.matrix());
            let numerator = w * (1.0 + outcome.sign() * rec.x());
            let op = if numerator == 0.0 {
                Mat2::zeros()
            } else if denominator <= POM_DENOMINATOR_EPS {
                return Err(Error::SingularRenormalization { setting: j, sign: outcome.sign_i8() });
            } else {
                projector.matrix() * num_complex::Complex64::new(numerator / (2.0 * denominator), 0.0)
            };
            elements.push(RenormalizedElement { op, setting_index: j, outcome });
        }
    }
    Ok(elements)
}

/// 1 for a pure state (smallest eigenvalue at most [`RANK_EPS`]), otherwise 2.
pub fn state_rank(rho: &DensityMatrix) -> u8 {
    if rho.eigenvalues().0 <= RANK_EPS {
        1
    } else {
        2
    }
}

fn element_sum(pom: &[RenormalizedElement]) -> Mat2 {
    pom.iter().fold(Mat2::zeros(), |acc, e| acc + e.op)
}

/// Closure defect of the renormalized measurement.
///
/// Full-rank `rho_e`: largest entry of `Σ E − 1`. Pure `rho_e = |e⟩⟨e|`:
/// `|⟨e|Σ E|e⟩ − 1|`.
pub fn closure_defect(pom: &[RenormalizedElement], rho_e: &DensityMatrix) -> f64 {
    let sum = element_sum(pom);
    if state_rank(rho_e) == 2 {
        return max_entry_norm(&(sum - identity()));
    }
    // For a Hermitian 2×2 matrix, the projector onto the top eigenvector is
    // (ρ − λ_lo)/(λ_hi − λ_lo).
    let (lo, hi) = hermitian_eigenvalues(rho_e.matrix());
    let ray = (rho_e.matrix() - identity() * num_complex::Complex64::new(lo, 0.0))
        / num_complex::Complex64::new(hi - lo, 0.0);
    ((ray * sum).trace().re - 1.0).abs()
}

/// `max_{j,±} |Tr{ρ_e E_{j,±}} − w_j(1 ± X_j)/2|`. Zero up to round-off by construction.
pub fn expectation_identity_defect(
    rho_e: &DensityMatrix,
    pom: &[RenormalizedElement],
    records: &[MeasurementRecord],
) -> f64 {
    let weights = setting_weights(records);
    pom.iter()
        .map(|e| {
            let rec = &records[e.setting_index];
            let target = 0.5 * weights[e.setting_index] * (1.0 + e.outcome.sign() * rec.x());
            (rho_e.expectation(&e.op) - target).abs()
        })
        .fold(0.0, f64::max)
}

/// Summary of the renormalized measurement at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub closure_defect: f64,
    pub expectation_defect: f64,
    pub rank: u8,
    pub elements: usize,
}

pub fn diagnose(records: &[MeasurementRecord], rho_e: &DensityMatrix) -> Result<DiagnosticReport> {
    if records.is_empty() {
        return Err(Error::Empty("measurement records"));
    }
    let pom = build_renormalized_pom(records, rho_e)?;
    Ok(DiagnosticReport {
        closure_defect: closure_defect(&pom, rho_e),
        expectation_defect: expectation_identity_defect(rho_e, &pom, records),
        rank: state_rank(rho_e),
        elements: pom.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{density_from_polarization, Direction, PolarizationVector};
    use crate::estimator::{maxlik_fixed_point, SolverOptions};

    fn axes(counts: [(u64, u64); 3]) -> Vec<MeasurementRecord> {
        [Direction::x(), Direction::y(), Direction::z()]
            .into_iter()
            .zip(counts)
            .map(|(d, (p, m))| MeasurementRecord::from_counts(d, p, m).unwrap())
            .collect()
    }

    #[test]
    fn unit_renormalization_at_the_mixed_state() {
        let records = vec![MeasurementRecord::from_counts(Direction::z(), 10, 10).unwrap()];
        let rho = DensityMatrix::maximally_mixed();
        let pom = build_renormalized_pom(&records, &rho).unwrap();
        assert_eq!(pom.len(), 2);
        for e in &pom {
            let p = projector_from_direction(&Direction::z(), e.outcome);
            assert!(max_entry_norm(&(e.op - p.matrix())) <= 1e-15);
            assert!((rho.expectation(&e.op) - 0.5).abs() <= 1e-15);
        }
        assert_eq!(expectation_identity_defect(&rho, &pom, &records), 0.0);
    }

    #[test]
    fn noiseless_axes_close_to_identity() {
        let records = axes([(13, 7), (8, 12), (15, 5)]);
        // The element sum is 1·R + K·σ, so its distance from 1 tracks tol_k.
        let opts = SolverOptions { tol_k: 1e-12, ..SolverOptions::default() };
        let est = maxlik_fixed_point(&records, &opts).unwrap();
        let rho = density_from_polarization(&est.solution());
        let pom = build_renormalized_pom(&records, &rho).unwrap();
        assert_eq!(pom.len(), 6);
        for e in &pom {
            assert!(hermitian_eigenvalues(&e.op).0 >= -1e-12);
            assert!(max_entry_norm(&(e.op - e.op.adjoint())) <= 1e-12);
        }
        assert!(max_entry_norm(&(element_sum(&pom) - identity())) <= 1e-10);
        assert!(closure_defect(&pom, &rho) <= 1e-8);
    }

    #[test]
    fn aligned_pure_state_zeroes_the_impossible_outcome() {
        let records = vec![MeasurementRecord::from_counts(Direction::z(), 20, 0).unwrap()];
        let rho = density_from_polarization(&PolarizationVector::new([0.0, 0.0, 1.0]).unwrap());
        let pom = build_renormalized_pom(&records, &rho).unwrap();
        assert_eq!(pom[1].op, Mat2::zeros());
        // (1 + 1)/(2·1·1) = 1 times the projector, which here equals ρ_e.
        assert!(max_entry_norm(&(pom[0].op - rho.matrix())) <= 1e-15);
        assert_eq!(state_rank(&rho), 1);
        assert!(closure_defect(&pom, &rho) <= 1e-12);
    }

    #[test]
    fn singular_renormalization() {
        let records = vec![MeasurementRecord::from_counts(Direction::z(), 19, 1).unwrap()];
        let rho = density_from_polarization(&PolarizationVector::new([0.0, 0.0, 1.0]).unwrap());
        assert_eq!(
            build_renormalized_pom(&records, &rho),
            Err(Error::SingularRenormalization { setting: 0, sign: -1 })
        );
    }

    #[test]
    fn non_extremal_state_fails_closure() {
        let records = axes([(17, 3), (6, 14), (15, 5)]);
        let rho = DensityMatrix::maximally_mixed();
        let report = diagnose(&records, &rho).unwrap();
        assert!(report.closure_defect > 1e-3);
        assert_eq!(report.rank, 2);
        assert_eq!(report.elements, 6);
    }

    #[test]
    fn report_json_shape() {
        let records = axes([(13, 7), (8, 12), (15, 5)]);
        let report = diagnose(&records, &DensityMatrix::maximally_mixed()).unwrap();
        let json = serde_json::to_value(report).unwrap();
        assert_eq!(json["rank"], 2);
        assert_eq!(json["elements"], 6);
        assert!(json["closure_defect"].is_f64());
    }
}
