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

//! Synthetic Stern-Gerlach count data.
//!
//! Every setting draws from its own ChaCha20 stream: the generator is keyed
//! with `ChaCha20Rng::seed_from_u64(seed)` and the stream number is the setting
//! index. One uniform variate per setting is mapped to a count through the
//! binomial inverse CDF, so a campaign does not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::algebra::{born_probability, Direction, Outcome, PolarizationVector};
use crate::error::{Error, Result};
use crate::io::RecordRow;

/// Seed for all simulated randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Child seed for repetition `index`, via the SplitMix64 output function.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))))
    }

    /// Generator for setting `index` of a campaign seeded with `self`.
    pub fn stream(self, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Analyzer orientation plus the number of particles sent through it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    direction: Direction,
    n_particles: u64,
}

impl MeasurementSetting {
    pub fn new(direction: Direction, n_particles: u64) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidSetting("particle count must be at least 1".into()));
        }
        Ok(MeasurementSetting { direction, n_particles })
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn n_particles(&self) -> u64 {
        self.n_particles
    }
}

/// Observed counts for one setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordRow", into = "RecordRow")]
pub struct MeasurementRecord {
    setting: MeasurementSetting,
    n_plus: u64,
    n_minus: u64,
    x: f64,
}

impl MeasurementRecord {
    pub fn new(setting: MeasurementSetting, n_plus: u64, n_minus: u64) -> Result<Self> {
        if n_plus.checked_add(n_minus) != Some(setting.n_particles) {
            return Err(Error::InvalidRecord(format!(
                "counts {n_plus} + {n_minus} do not add up to N = {}",
                setting.n_particles
            )));
        }
        let x = (n_plus as f64 - n_minus as f64) / setting.n_particles as f64;
        Ok(MeasurementRecord { setting, n_plus, n_minus, x })
    }

    /// Convenience constructor from a direction and the two counts.
    pub fn from_counts(direction: Direction, n_plus: u64, n_minus: u64) -> Result<Self> {
        let setting = MeasurementSetting::new(direction, n_plus + n_minus)?;
        Self::new(setting, n_plus, n_minus)
    }

    pub fn setting(&self) -> &MeasurementSetting {
        &self.setting
    }

    pub fn direction(&self) -> &Direction {
        &self.setting.direction
    }

    pub fn n_particles(&self) -> u64 {
        self.setting.n_particles
    }

    pub fn n_plus(&self) -> u64 {
        self.n_plus
    }

    pub fn n_minus(&self) -> u64 {
        self.n_minus
    }

    pub fn count(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::Up => self.n_plus,
            Outcome::Down => self.n_minus,
        }
    }

    /// Signed frequency `X = (n₊ − n₋)/N`.
    pub fn x(&self) -> f64 {
        self.x
    }

    /// Weight `N(1 ± X)/2` of an outcome in the likelihood.
    pub fn outcome_weight(&self, outcome: Outcome) -> f64 {
        0.5 * self.n_particles() as f64 * (1.0 + outcome.sign() * self.x)
    }
}

/// Draws the counts of one setting.
pub fn simulate_setting(
    r_true: &PolarizationVector,
    setting: &MeasurementSetting,
    seed: RngSeed,
) -> MeasurementRecord {
    simulate_stream(r_true, setting, &mut seed.stream(0))
}

fn simulate_stream(
    r_true: &PolarizationVector,
    setting: &MeasurementSetting,
    rng: &mut ChaCha20Rng,
) -> MeasurementRecord {
    let p = born_probability(r_true, setting.direction(), Outcome::Up);
    let u: f64 = rng.random();
    let n = setting.n_particles();
    let n_plus = binomial_inverse_cdf(n, p, u);
    MeasurementRecord::new(*setting, n_plus, n - n_plus).expect("counts add up by construction")
}

/// One record per setting; setting `j` uses stream `j` of `seed`.
pub fn simulate_campaign(
    r_true: &PolarizationVector,
    settings: &[MeasurementSetting],
    seed: RngSeed,
) -> Result<Vec<MeasurementRecord>> {
    if settings.is_empty() {
        return Err(Error::Empty("measurement settings"));
    }
    Ok(settings
        .iter()
        .enumerate()
        .map(|(j, s)| simulate_stream(r_true, s, &mut seed.stream(j as u64)))
        .collect())
}

/// Predicted standard deviation of `n₊` (equivalently `n₋`): `√(N(1 − (r·a)²))/2`.
pub fn sampling_rms(r: &PolarizationVector, a: &Direction, n_particles: u64) -> f64 {
    let proj = a.dot(r.vector()).clamp(-1.0, 1.0);
    (n_particles as f64 * (1.0 - proj * proj)).sqrt() / 2.0
}

/// Smallest `k` with `P(Binomial(n, p) ≤ k) > u`.
///
/// The walk starts well below the mean (ten standard deviations plus ten), where
/// the omitted lower tail is far below double precision, and accumulates the
/// probability mass with the ratio recurrence.
pub fn binomial_inverse_cdf(n: u64, p: f64, u: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let nf = n as f64;
    let mean = nf * p;
    let sd = (mean * (1.0 - p)).sqrt();
    let start = (mean - 10.0 * sd - 10.0).floor().max(0.0) as u64;
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    let odds = p / (1.0 - p);
    let mut pmf = (ln_binomial(n, start) + start as f64 * ln_p + (n - start) as f64 * ln_q).exp();
    let mut cdf = pmf;
    let mut k = start;
    while cdf <= u && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
        cdf += pmf;
    }
    k
}
