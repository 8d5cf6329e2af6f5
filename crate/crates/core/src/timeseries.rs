//! CSV diagnostics output. One row per time, 17 significant digits so every
//! f64 value round-trips exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::diagnostics::DiagnosticRecord;
use crate::error::MsError;
use crate::Result;

/// Fixed column order of the diagnostics CSV.
pub const CSV_HEADER: &str =
    "t,charge,energy,e2,e2_rhs,h1_u,h2_u,sigma_A,sigma_minus1_At,m_norm,lorentz_l1,diamag_violation";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes time-sorted records; an empty slice produces a header-only file.
pub fn write_timeseries(records: &[DiagnosticRecord], path: &Path) -> Result<()> {
    for w in records.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(MsError::Series("records must be time-sorted".into()));
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let h1 = r.h_norm_u(1.0).unwrap_or(f64::NAN);
        let h2 = r.h_norm_u(2.0).unwrap_or(f64::NAN);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.t),
            fmt(r.charge),
            fmt(r.energy),
            fmt(r.e2),
            fmt(r.e2_rhs),
            fmt(h1),
            fmt(h2),
            fmt(r.sigma_a),
            fmt(r.sigma_minus1_at),
            fmt(r.m_norm),
            fmt(r.lorentz_l1),
            fmt(r.diamag_violation),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a diagnostics CSV written by [`write_timeseries`].
pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticRecord>> {
    let f = BufReader::new(File::open(path)?);
    let mut lines = f.lines();
    let header = lines
        .next()
        .ok_or_else(|| MsError::Series("empty diagnostics file".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(MsError::Series(format!(
            "unexpected CSV header: {header}"
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 12 {
            return Err(MsError::Series(format!(
                "row {} has {} columns, expected 12",
                lineno + 2,
                cols.len()
            )));
        }
        let mut vals = [0.0f64; 12];
        for (i, c) in cols.iter().enumerate() {
            vals[i] = c.trim().parse::<f64>().map_err(|e| {
                MsError::Series(format!("row {}: bad float '{}': {}", lineno + 2, c, e))
            })?;
        }
        records.push(DiagnosticRecord {
            t: vals[0],
            charge: vals[1],
            energy: vals[2],
            e2: vals[3],
            e2_rhs: vals[4],
            sobolev: vec![(1.0, vals[5]), (2.0, vals[6])],
            sigma_a: vals[7],
            sigma_minus1_at: vals[8],
            m_norm: vals[9],
            lorentz_l1: vals[10],
            diamag_violation: vals[11],
        });
    }
    Ok(records)
}
