//! Per-iteration run logs and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{IlcError, Result};
use crate::signal::Signal;
use crate::solvers::SolverConfig;

pub const CSV_HEADER: [&str; 7] = [
    "j",
    "experiments_cum",
    "cost_measured",
    "cost_true",
    "epsilon",
    "tau",
    "reset",
];

/// One iteration. `experiments_cum` counts experiments up to and including
/// the trial that measured `cost_measured`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub j: usize,
    pub experiments_cum: u64,
    pub cost_measured: f64,
    /// Noise-free cost from the hidden model, for analysis only.
    pub cost_true: f64,
    /// Step taken after this trial; absent when the run stopped before stepping.
    pub epsilon: Option<f64>,
    /// Conjugation coefficient used to form this iteration's direction.
    pub tau: Option<f64>,
    pub reset: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    Budget,
    CostTolerance,
    DegenerateDirection,
    Completed,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub config: SolverConfig,
    pub records: Vec<IterationRecord>,
    pub final_input: Signal,
    pub stop: StopReason,
    /// Search directions, kept only when the config asks for them.
    pub directions: Vec<Signal>,
    pub notes: Vec<String>,
}

impl RunTrace {
    pub fn label(&self) -> String {
        self.config.label()
    }

    pub fn initial_cost_measured(&self) -> Option<f64> {
        self.records.first().map(|r| r.cost_measured)
    }

    pub fn initial_cost_true(&self) -> Option<f64> {
        self.records.first().map(|r| r.cost_true)
    }

    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Cumulative experiments at the first record whose cost is at most
    /// `ratio` times the first cost. `use_true` picks `cost_true` over
    /// `cost_measured`.
    pub fn experiments_to_reach(&self, ratio: f64, use_true: bool) -> Option<u64> {
        let cost = |r: &IterationRecord| if use_true { r.cost_true } else { r.cost_measured };
        let first = cost(self.records.first()?);
        self.records
            .iter()
            .find(|r| cost(r) <= ratio * first)
            .map(|r| r.experiments_cum)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records(&self.records, out)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn write_records<W: Write>(records: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.j.to_string(),
            r.experiments_cum.to_string(),
            real(r.cost_measured),
            real(r.cost_true),
            opt_real(r.epsilon),
            opt_real(r.tau),
            u8::from(r.reset).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(row: usize, name: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| IlcError::Parse(format!("row {row}: bad {name} value {s:?}")))
}

fn parse_opt(row: usize, name: &str, s: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_field(row, name, s).map(Some)
    }
}

/// Parses a trace CSV produced by [`write_records`].
pub fn read_records<R: Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(IlcError::Parse(format!(
            "unexpected trace header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(IlcError::Parse(format!("row {row}: expected 7 fields")));
        }
        let reset = match rec[6].trim() {
            "0" | "false" => false,
            "1" | "true" => true,
            other => return Err(IlcError::Parse(format!("row {row}: bad reset flag {other:?}"))),
        };
        records.push(IterationRecord {
            j: parse_field(row, "j", &rec[0])?,
            experiments_cum: parse_field(row, "experiments_cum", &rec[1])?,
            cost_measured: parse_field(row, "cost_measured", &rec[2])?,
            cost_true: parse_field(row, "cost_true", &rec[3])?,
            epsilon: parse_opt(row, "epsilon", &rec[4])?,
            tau: parse_opt(row, "tau", &rec[5])?,
            reset,
        });
    }
    Ok(records)
}
