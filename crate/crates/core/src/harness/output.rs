//! CSV and JSON emission of aggregate traces.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::AggregateTrace;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "k",
    "alpha_k",
    "mean_sq_dist",
    "se_sq_dist",
    "mean_F_gap",
    "se_F_gap",
    "bound",
    "comm_rounds_mean",
    "test_acc_mean",
];

fn cell(v: Option<f64>) -> String {
    // `Display` for f64 prints the shortest decimal that round-trips.
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// One data row per recorded iteration; inapplicable cells are empty.
pub fn emit_csv(agg: &AggregateTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for r in &agg.rows {
        w.write_record([
            r.k.to_string(),
            cell(Some(r.alpha_k)),
            cell(r.mean_sq_dist),
            cell(r.se_sq_dist),
            cell(r.mean_f_gap),
            cell(r.se_f_gap),
            cell(r.bound),
            cell(Some(r.comm_rounds_mean)),
            cell(r.test_acc_mean),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A parsed CSV row; columns in [`CSV_HEADER`] order after `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub k: u64,
    pub values: [Option<f64>; 8],
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("{}: unexpected CSV header", path.display())));
    }
    let bad = |s: &str| Error::Config(format!("{}: bad number `{s}`", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let k = rec[0].parse().map_err(|_| bad(&rec[0]))?;
        let mut values = [None; 8];
        for (slot, s) in values.iter_mut().zip(rec.iter().skip(1)) {
            if !s.is_empty() {
                *slot = Some(s.parse().map_err(|_| bad(s))?);
            }
        }
        rows.push(CsvRow { k, values });
    }
    Ok(rows)
}

pub fn emit_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}
