//! CSV and JSON writers. Every CSV starts with a `schema_version` column and
//! every JSON document carries a top-level `schema_version` field; the CSV
//! headers are listed in `schemas/csv_headers.json` and the JSON layouts in
//! the `*.schema.json` files next to it.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::grid::{CellSummary, MisspecComparison};

pub const SCHEMA_VERSION: u32 = 1;

fn header_of<T: Serialize>(row: &T) -> Result<Vec<String>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(row)?;
    let bytes = w.into_inner().map_err(|e| HarnessError::Io { path: "<buffer>".into(), source: e.into_error() })?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    Ok(r.headers()?.iter().map(str::to_owned).collect())
}

/// Writes `rows` as CSV with a leading `schema_version` column.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let mut header = vec!["schema_version".to_owned()];
    if let Some(first) = rows.first() {
        header.extend(header_of(first)?);
    }
    w.write_record(&header)?;
    for row in rows {
        w.serialize((SCHEMA_VERSION, row))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: "<csv>".into(), source })?;
    Ok(())
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a top-level `schema_version` field; `body` must
/// serialize to an object.
pub fn write_json<T: Serialize, W: Write>(body: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &Versioned { schema_version: SCHEMA_VERSION, body })?;
    writeln!(writer).map_err(|source| HarnessError::Io { path: "<json>".into(), source })?;
    Ok(())
}

pub fn to_json_value<T: Serialize>(body: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(Versioned { schema_version: SCHEMA_VERSION, body })?)
}

/// Opens `path` for writing, or stdout when `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|source| HarnessError::Io { path: p.display().to_string(), source })?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Flat CSV row for a worst-case cell and its matched well-specified cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisspecRow {
    pub cell: usize,
    pub d: usize,
    pub p: f64,
    pub b: f64,
    pub n: usize,
    pub replicates: usize,
    pub existence_frequency: f64,
    pub existence_lower: f64,
    pub existence_upper: f64,
    pub no_sign_error_frequency: f64,
    pub no_sign_error_expected: f64,
    pub no_sign_error_se: f64,
    pub excess_q50: Option<f64>,
    pub excess_q90: Option<f64>,
    pub excess_q99: Option<f64>,
    pub wilks_mean: Option<f64>,
    pub wilks_q99: Option<f64>,
    pub matched_existence_frequency: f64,
    pub matched_excess_q99: Option<f64>,
    pub matched_wilks_mean: Option<f64>,
    pub matched_wilks_q99: Option<f64>,
    /// Worst-case over matched 0.99-quantile of the excess risk.
    pub tail_ratio: Option<f64>,
}

impl From<&MisspecComparison> for MisspecRow {
    fn from(c: &MisspecComparison) -> Self {
        let w = &c.worst_case;
        let m = &c.matched;
        let two_n = 2.0 * w.n as f64;
        Self {
            cell: w.cell,
            d: w.d,
            p: w.signal,
            b: w.b,
            n: w.n,
            replicates: w.replicates,
            existence_frequency: w.existence_frequency,
            existence_lower: w.existence_lower,
            existence_upper: w.existence_upper,
            no_sign_error_frequency: c.no_sign_error_frequency,
            no_sign_error_expected: c.no_sign_error_expected,
            no_sign_error_se: c.no_sign_error_se,
            excess_q50: w.excess_q50,
            excess_q90: w.excess_q90,
            excess_q99: w.excess_q99,
            wilks_mean: w.wilks_mean,
            wilks_q99: w.excess_q99.map(|q| two_n * q),
            matched_existence_frequency: m.existence_frequency,
            matched_excess_q99: m.excess_q99,
            matched_wilks_mean: m.wilks_mean,
            matched_wilks_q99: m.excess_q99.map(|q| two_n * q),
            tail_ratio: w.excess_q99.zip(m.excess_q99).map(|(a, b)| a / b),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellTiming {
    pub cell: usize,
    pub wall_time_s: f64,
}

/// Wall times live in a sidecar JSON so the CSV stays reproducible.
pub fn timings(cells: &[CellSummary]) -> Vec<CellTiming> {
    cells.iter().map(|c| CellTiming { cell: c.cell, wall_time_s: c.wall_time_s }).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub beta: f64,
    pub h_hat: f64,
    pub se: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub replicate: usize,
    pub min_whitened_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradDevRow {
    pub replicate: usize,
    pub statistic: f64,
    pub bound: f64,
}
