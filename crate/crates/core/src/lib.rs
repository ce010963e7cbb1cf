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

//! Simulation and maximum-likelihood reconstruction of spin-1/2 states
//! measured with Stern-Gerlach analyzers in arbitrary directions.
//!
//! * [`algebra`]: Pauli matrices, projectors, density matrices and Bloch vectors.
//! * [`simulator`]: seeded binomial count data.
//! * [`estimator`]: linear inversion, the fixed-point likelihood maximizer and
//!   a brute-force lattice oracle.
//! * [`pom`]: the renormalized measurement at the reconstructed state.
//! * [`harness`]: repeated experiments with CSV/JSON export.

// `!(a < b)` is used on purpose where NaN must take the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod pom;
pub mod simulator;

pub use error::{Error, Result};
