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

use thiserror::Error;

/// Errors raised by state validation, simulation and reconstruction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid direction: {0}")]
    InvalidDirection(String),
    #[error("polarization outside the unit ball: |r| = {norm}")]
    OutOfBall { norm: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid measurement setting: {0}")]
    InvalidSetting(String),
    #[error("invalid measurement record: {0}")]
    InvalidRecord(String),
    #[error("invalid measurement frame: {0}")]
    InvalidFrame(String),
    #[error("singular denominator: |a·r| = {0} for setting {1}")]
    SingularDenominator(f64, usize),
    #[error("singular renormalization for setting {setting} ({sign:+})")]
    SingularRenormalization { setting: usize, sign: i8 },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
