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

//! Spin-1/2 algebra: Pauli matrices, analyzer projectors, and the
//! correspondence between density matrices and polarization vectors.
//!
//! Pauli convention: σ₁ = x, σ₂ = y, σ₃ = z, with σ₃ = diag(1, −1).

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 2×2 complex matrix.
pub type Mat2 = Matrix2<Complex64>;

/// Tolerance for ball membership of polarization vectors.
pub const BALL_EPS: f64 = 1e-12;
/// Tolerance for Hermiticity, trace and eigenvalue checks on density matrices.
pub const STATE_EPS: f64 = 1e-12;
/// Tolerance for probabilities slightly outside [0, 1].
pub const PROBABILITY_EPS: f64 = 1e-12;
/// Smallest vector norm accepted by [`Direction::new`].
pub const MIN_DIRECTION_NORM: f64 = 1e-9;
/// Allowed deviation from unit norm for [`Direction::from_unit`].
pub const UNIT_EPS: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// The three Pauli matrices `[σ₁, σ₂, σ₃]`.
pub fn pauli() -> [Mat2; 3] {
    [
        Mat2::new(ZERO, ONE, ONE, ZERO),
        Mat2::new(ZERO, -I, I, ZERO),
        Mat2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

/// `c·1 + v_i σ_i` for real `c` and `v`.
fn pauli_combination(c: f64, v: &Vector3<f64>) -> Mat2 {
    Mat2::new(
        Complex64::new(c + v.z, 0.0),
        Complex64::new(v.x, -v.y),
        Complex64::new(v.x, v.y),
        Complex64::new(c - v.z, 0.0),
    )
}

/// Outcome of a Stern-Gerlach analyzer: spin up (`+a`) or down (`−a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Up, Outcome::Down];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Up => 1.0,
            Outcome::Down => -1.0,
        }
    }

    pub fn sign_i8(self) -> i8 {
        match self {
            Outcome::Up => 1,
            Outcome::Down => -1,
        }
    }
}

/// Unit analyzer direction. Serialized as a 3-array; deserialization normalizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction(Vector3<f64>);

impl Direction {
    /// Normalizes `v`. Vectors shorter than [`MIN_DIRECTION_NORM`] are rejected.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let v = Vector3::from(v);
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDirection(format!("non-finite component in {:?}", v.as_slice())));
        }
        let norm = v.norm();
        if norm < MIN_DIRECTION_NORM {
            return Err(Error::InvalidDirection(format!(
                "norm {norm:e} below {MIN_DIRECTION_NORM:e}"
            )));
        }
        // Vectors that are already unit-norm up to rounding are kept bit for bit.
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Direction(v));
        }
        Ok(Direction(v / norm))
    }

    /// Accepts `v` only if it is already unit-norm within [`UNIT_EPS`].
    pub fn from_unit(v: [f64; 3]) -> Result<Self> {
        let v = Vector3::from(v);
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_EPS {
            return Err(Error::InvalidDirection(format!("norm {norm} is not 1")));
        }
        Ok(Direction(v))
    }

    /// Direction at polar angle `theta` from +z and azimuth `phi`, in radians.
    pub fn spherical(theta: f64, phi: f64) -> Self {
        Direction(Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()))
    }

    pub fn x() -> Self {
        Direction(Vector3::x())
    }

    pub fn y() -> Self {
        Direction(Vector3::y())
    }

    pub fn z() -> Self {
        Direction(Vector3::z())
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn dot(&self, v: &Vector3<f64>) -> f64 {
        self.0.dot(v)
    }
}

impl std::ops::Neg for Direction {
    type Output = Direction;

    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

/// Bloch (polarization) vector of a spin-1/2 state, confined to the closed unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct PolarizationVector(Vector3<f64>);

impl PolarizationVector {
    /// Validates `v`. A norm in `(1, 1 + BALL_EPS]` is rescaled onto the unit sphere.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        Self::from_vector(Vector3::from(v))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite polarization {:?}", v.as_slice())));
        }
        let norm = v.norm();
        if norm > 1.0 + BALL_EPS {
            return Err(Error::OutOfBall { norm });
        }
        if norm > 1.0 {
            return Ok(PolarizationVector(v / norm));
        }
        Ok(PolarizationVector(v))
    }

    pub fn origin() -> Self {
        PolarizationVector(Vector3::zeros())
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Unit vector along `r`, or `None` at the origin.
    pub fn unit(&self) -> Option<Vector3<f64>> {
        let n = self.0.norm();
        (n > 0.0).then(|| self.0 / n)
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Direction::new(v)
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> Self {
        d.to_array()
    }
}

impl TryFrom<[f64; 3]> for PolarizationVector {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        PolarizationVector::new(v)
    }
}

impl From<PolarizationVector> for [f64; 3] {
    fn from(r: PolarizationVector) -> Self {
        r.to_array()
    }
}

/// 2×2 Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Mat2);

impl DensityMatrix {
    pub fn new(m: Mat2) -> Result<Self> {
        if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let herm = max_entry_norm(&(m - m.adjoint()));
        if herm > STATE_EPS {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_EPS || tr.im.abs() > STATE_EPS {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let (lo, _) = hermitian_eigenvalues(&m);
        if lo < -STATE_EPS {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(DensityMatrix(m))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(identity() * Complex64::new(0.5, 0.0))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        hermitian_eigenvalues(&self.0)
    }

    /// `Tr{ρ P}` for a projector `P`, as a real probability.
    pub fn expectation(&self, op: &Mat2) -> f64 {
        (self.0 * op).trace().re
    }
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - half_gap, mean + half_gap)
}

/// Largest entry modulus.
pub fn max_entry_norm(m: &Mat2) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `½(1 + sign·a_iσ_i)`, the projector onto spin along `±a`.
pub fn projector_from_direction(a: &Direction, outcome: Outcome) -> DensityMatrix {
    DensityMatrix(pauli_combination(0.5, &(a.vector() * (0.5 * outcome.sign()))))
}

/// `|⟨a|b⟩|² = ½(1 + a·b)`.
pub fn overlap_squared(a: &Direction, b: &Direction) -> f64 {
    clamp_probability(0.5 * (1.0 + a.vector().dot(b.vector())))
        .expect("unit directions give overlaps inside [0, 1]")
}

/// `ρ = ½(1 + r_iσ_i)`.
pub fn density_from_polarization(r: &PolarizationVector) -> DensityMatrix {
    DensityMatrix(pauli_combination(0.5, &(r.vector() * 0.5)))
}

/// `r_i = Tr{ρ σ_i}`.
pub fn polarization_from_density(rho: &DensityMatrix) -> Result<PolarizationVector> {
    let m = rho.matrix();
    // Off-diagonal entries are averaged so that tiny anti-Hermitian noise cancels.
    let r = Vector3::new(
        (m[(0, 1)] + m[(1, 0)]).re,
        (m[(1, 0)] - m[(0, 1)]).im,
        m[(0, 0)].re - m[(1, 1)].re,
    );
    PolarizationVector::from_vector(r)
}

/// Born probability `p(±a) = ½(1 ± r·a)`.
///
/// The two outcomes of one analyzer are computed so that `p(+a) + p(−a)` is
/// exactly 1 in floating point.
pub fn born_probability(r: &PolarizationVector, a: &Direction, outcome: Outcome) -> f64 {
    let (up, down) = complementary_pair(0.5 * (1.0 + a.dot(r.vector())));
    match outcome {
        Outcome::Up => up,
        Outcome::Down => down,
    }
}

/// Splits a probability `p` of the up outcome into `(p_up, p_down)` with
/// `p_up + p_down == 1.0` exactly. `p` is clamped into `[0, 1]` first.
pub fn complementary_pair(p: f64) -> (f64, f64) {
    let p = p.clamp(0.0, 1.0);
    if p >= 0.5 {
        (p, 1.0 - p)
    } else {
        let down = 1.0 - p;
        (1.0 - down, down)
    }
}

/// Clamps values within [`PROBABILITY_EPS`] of `[0, 1]`; rejects larger violations.
pub fn clamp_probability(p: f64) -> Result<f64> {
    if !p.is_finite() || !(-PROBABILITY_EPS..=1.0 + PROBABILITY_EPS).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(p.clamp(0.0, 1.0))
}
