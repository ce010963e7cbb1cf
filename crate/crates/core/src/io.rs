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

//! File formats: measurement records as JSON or CSV, and the CSV tables
//! written by the experiment harness.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::Direction;
use crate::error::{Error, Result};
use crate::harness::ExperimentReport;
use crate::simulator::{MeasurementRecord, MeasurementSetting};

/// Allowed mismatch between a stored `x` and the one implied by the counts.
pub const FREQUENCY_EPS: f64 = 1e-12;

/// Serialized form of a [`MeasurementRecord`]:
/// `{"a":[ax,ay,az],"N":int,"n_plus":int,"n_minus":int,"x":float}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordRow {
    pub a: [f64; 3],
    #[serde(rename = "N")]
    pub n: u64,
    pub n_plus: u64,
    pub n_minus: u64,
    pub x: f64,
}

/// CSV layout: `a_x,a_y,a_z,N,n_plus,n_minus,x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CsvRecordRow {
    a_x: f64,
    a_y: f64,
    a_z: f64,
    #[serde(rename = "N")]
    n: u64,
    n_plus: u64,
    n_minus: u64,
    x: f64,
}

impl From<MeasurementRecord> for RecordRow {
    fn from(r: MeasurementRecord) -> Self {
        RecordRow {
            a: r.direction().to_array(),
            n: r.n_particles(),
            n_plus: r.n_plus(),
            n_minus: r.n_minus(),
            x: r.x(),
        }
    }
}

impl TryFrom<RecordRow> for MeasurementRecord {
    type Error = Error;

    fn try_from(row: RecordRow) -> Result<Self> {
        let setting = MeasurementSetting::new(Direction::new(row.a)?, row.n)?;
        let record = MeasurementRecord::new(setting, row.n_plus, row.n_minus)?;
        if !((record.x() - row.x).abs() <= FREQUENCY_EPS) {
            return Err(Error::InvalidRecord(format!(
                "x = {} does not match counts ({} - {})/{}",
                row.x, row.n_plus, row.n_minus, row.n
            )));
        }
        Ok(record)
    }
}

fn indexed<T>(index: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::InvalidRecord(format!("record {index}: {e}")))
}

pub fn records_to_json(records: &[MeasurementRecord]) -> String {
    let rows: Vec<RecordRow> = records.iter().copied().map(RecordRow::from).collect();
    serde_json::to_string_pretty(&rows).expect("records serialize") + "\n"
}

pub fn records_from_json(text: &str) -> Result<Vec<MeasurementRecord>> {
    let rows: Vec<RecordRow> =
        serde_json::from_str(text).map_err(|e| Error::InvalidRecord(e.to_string()))?;
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| indexed(i, MeasurementRecord::try_from(row)))
        .collect()
}

pub fn records_to_csv(records: &[MeasurementRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        let a = r.direction().to_array();
        w.serialize(CsvRecordRow {
            a_x: a[0],
            a_y: a[1],
            a_z: a[2],
            n: r.n_particles(),
            n_plus: r.n_plus(),
            n_minus: r.n_minus(),
            x: r.x(),
        })
        .expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

pub fn records_from_csv(text: &str) -> Result<Vec<MeasurementRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize::<CsvRecordRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| Error::InvalidRecord(format!("record {i}: {e}")))?;
            let row = RecordRow {
                a: [row.a_x, row.a_y, row.a_z],
                n: row.n,
                n_plus: row.n_plus,
                n_minus: row.n_minus,
                x: row.x,
            };
            indexed(i, MeasurementRecord::try_from(row))
        })
        .collect()
}

/// Parses records as CSV when `path` ends in `.csv`, as JSON otherwise.
pub fn records_from_str_for_path(path: &Path, text: &str) -> Result<Vec<MeasurementRecord>> {
    if is_csv(path) {
        records_from_csv(text)
    } else {
        records_from_json(text)
    }
}

/// Serializes records as CSV when `path` ends in `.csv`, as JSON otherwise.
pub fn records_to_string_for_path(path: &Path, records: &[MeasurementRecord]) -> String {
    if is_csv(path) {
        records_to_csv(records)
    } else {
        records_to_json(records)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

#[derive(Serialize)]
struct BarRow {
    repetition: usize,
    setting: usize,
    sign: i8,
    p_true: f64,
    p_empirical: f64,
    p_reconstructed: f64,
}

#[derive(Serialize)]
struct StateRow {
    repetition: usize,
    r1: f64,
    r2: f64,
    r3: f64,
    converged: bool,
    boundary: bool,
    log_likelihood: f64,
}

/// `repetition,setting,sign,p_true,p_empirical,p_reconstructed`, two rows per setting.
pub fn bars_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (rep, outcome) in report.per_repetition.iter().enumerate() {
        for bar in &outcome.bars {
            w.serialize(BarRow {
                repetition: rep,
                setting: bar.setting_index,
                sign: bar.outcome.sign_i8(),
                p_true: bar.p_true,
                p_empirical: bar.p_empirical,
                p_reconstructed: bar.p_reconstructed,
            })
            .expect("in-memory CSV write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

/// `repetition,r1,r2,r3,converged,boundary,log_likelihood`, one row per repetition.
pub fn states_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (rep, outcome) in report.per_repetition.iter().enumerate() {
        let r = outcome.reconstruction.r_est.to_array();
        w.serialize(StateRow {
            repetition: rep,
            r1: r[0],
            r2: r[1],
            r3: r[2],
            converged: outcome.reconstruction.converged,
            boundary: outcome.reconstruction.boundary,
            log_likelihood: outcome.reconstruction.log_likelihood,
        })
        .expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

pub fn report_json(report: &ExperimentReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}
