//! Snapshot tables.
//!
//! CSV with header `replica_id,time,particle_index,x1,…,xd`, one row per
//! particle. Floats use the shortest representation that parses back to the
//! same value, so a write/read cycle is lossless.

use std::io::{BufRead, Write};

use super::ParticleSnapshot;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub replica_id: u64,
    pub time: f64,
    pub dim: usize,
    pub positions: Vec<f64>,
}

pub fn write_snapshots_csv<'a, W: Write>(
    mut out: W,
    dim: usize,
    snapshots: impl IntoIterator<Item = (u64, &'a ParticleSnapshot)>,
) -> Result<()> {
    write!(out, "replica_id,time,particle_index")?;
    for a in 1..=dim {
        write!(out, ",x{a}")?;
    }
    writeln!(out)?;
    for (replica, snap) in snapshots {
        if snap.dim != dim {
            return Err(Error::Config(format!(
                "snapshot dimension {} differs from table dimension {dim}",
                snap.dim
            )));
        }
        for (i, p) in snap.points().enumerate() {
            write!(out, "{replica},{},{i}", snap.time)?;
            for x in p {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Reads a table written by [`write_snapshots_csv`], grouping consecutive rows
/// with the same replica and time.
pub fn read_snapshots_csv<R: BufRead>(input: R) -> Result<Vec<CsvRecord>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty snapshot table".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..3] != ["replica_id", "time", "particle_index"] {
        return Err(Error::Config(format!("unexpected header: {header}")));
    }
    let dim = cols.len() - 3;
    let bad = |n: usize, line: &str| Error::Config(format!("line {n}: cannot parse {line:?}"));

    let mut records: Vec<CsvRecord> = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 3 {
            return Err(bad(n + 2, &line));
        }
        let replica: u64 = fields[0].parse().map_err(|_| bad(n + 2, &line))?;
        let time: f64 = fields[1].parse().map_err(|_| bad(n + 2, &line))?;
        let start_new = records
            .last()
            .is_none_or(|r| r.replica_id != replica || r.time.to_bits() != time.to_bits());
        if start_new {
            records.push(CsvRecord {
                replica_id: replica,
                time,
                dim,
                positions: Vec::new(),
            });
        }
        let rec = records.last_mut().expect("pushed above");
        for f in &fields[3..] {
            rec.positions
                .push(f.parse().map_err(|_| bad(n + 2, &line))?);
        }
    }
    Ok(records)
}
