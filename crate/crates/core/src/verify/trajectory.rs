//! Trajectory CSV files with header `t,rho,regime,path_id`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a written file reproduces the values bit for bit.

use std::io::{Read, Write};

use crate::couplings::Regime;
use crate::error::{Error, Result};
use crate::sim::PathRecord;

pub const HEADER: [&str; 4] = ["t", "rho", "regime", "path_id"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub rho: f64,
    pub regime: Regime,
    pub path_id: u64,
}

pub fn rows_of(records: &[PathRecord]) -> Vec<TrajectoryRow> {
    records
        .iter()
        .flat_map(|r| {
            r.times
                .iter()
                .zip(&r.rhos)
                .zip(&r.regimes)
                .map(move |((&t, &rho), &regime)| TrajectoryRow {
                    t,
                    rho,
                    regime,
                    path_id: r.path_id,
                })
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.t.to_string(),
            row.rho.to_string(),
            row.regime.to_string(),
            row.path_id.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_csv_string(rows: &[TrajectoryRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: bad `{}` field", HEADER[i])))
}

/// Parses and validates a trajectory file: exact header, finite
/// non-negative times and distances, times strictly increasing within a path.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory file".into()))?
        .map_err(csv_err)?;
    if header.iter().ne(HEADER) {
        return Err(Error::Parse(format!("expected header {}", HEADER.join(","))));
    }
    let mut rows: Vec<TrajectoryRow> = Vec::new();
    let mut last: std::collections::HashMap<u64, f64> = Default::default();
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i as u64 + 2;
        if rec.len() != HEADER.len() {
            return Err(Error::Parse(format!("line {line}: expected 4 fields")));
        }
        let row = TrajectoryRow {
            t: field(&rec, 0, line)?,
            rho: field(&rec, 1, line)?,
            regime: rec[2].parse()?,
            path_id: field(&rec, 3, line)?,
        };
        if !(row.t.is_finite() && row.t >= 0.0 && row.rho.is_finite() && row.rho >= 0.0) {
            return Err(Error::Parse(format!("line {line}: t and rho must be finite and non-negative")));
        }
        if let Some(prev) = last.insert(row.path_id, row.t) {
            if row.t <= prev {
                return Err(Error::Parse(format!(
                    "line {line}: time {} does not increase on path {}",
                    row.t, row.path_id
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let rows = vec![
            TrajectoryRow { t: 0.0, rho: 1.0, regime: Regime::Coupled, path_id: 0 },
            TrajectoryRow { t: 0.1 + 0.2, rho: std::f64::consts::PI - 1e-17, regime: Regime::Independent, path_id: 0 },
            TrajectoryRow { t: 0.0, rho: 1e-300, regime: Regime::Coupled, path_id: 7 },
        ];
        let text = to_csv_string(&rows).unwrap();
        assert!(text.starts_with("t,rho,regime,path_id\n"));
        assert_eq!(parse_csv(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_csv("".as_bytes()).is_err());
        assert!(parse_csv("t,rho,path_id\n".as_bytes()).is_err());
        assert!(parse_csv("t,rho,regime,path_id\n0,1,coupled\n".as_bytes()).is_err());
        assert!(parse_csv("t,rho,regime,path_id\n0,-1,coupled,0\n".as_bytes()).is_err());
        assert!(parse_csv("t,rho,regime,path_id\n0,1,glued,0\n".as_bytes()).is_err());
        assert!(parse_csv("t,rho,regime,path_id\n0.5,1,coupled,0\n0.5,1,coupled,0\n".as_bytes()).is_err());
        assert!(parse_csv("t,rho,regime,path_id\n0,NaN,coupled,0\n".as_bytes()).is_err());
        assert_eq!(parse_csv("t,rho,regime,path_id\n".as_bytes()).unwrap(), vec![]);
    }
}
