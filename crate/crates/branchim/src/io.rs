//! CSV input and output.

use std::fs::{self, File};
use std::path::Path;

use branchim_core::arrivals::Intensity;
use branchim_core::simulator::Trajectory;
use serde::Deserialize;

use crate::error::{Error, Result};

/// A named CSV table kept in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(name: impl Into<String>, header: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    /// Writes `<dir>/<name>.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format_number(*x)))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

#[derive(Deserialize)]
struct KnotRow {
    t: f64,
    lambda: f64,
}

/// Reads a piecewise-linear intensity from a CSV with columns `t,lambda`.
pub fn read_intensity_table(path: &Path) -> Result<Intensity> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let knots = reader
        .deserialize::<KnotRow>()
        .map(|r| r.map(|k| (k.t, k.lambda)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Intensity::table(knots)?)
}

/// Header of the trajectory file: `replicate,t,N_1,…,N_k`.
pub fn trajectory_header(k: usize) -> Vec<String> {
    let mut h = vec!["replicate".to_string(), "t".to_string()];
    h.extend((1..=k).map(|i| format!("N_{i}")));
    h
}

/// Streams trajectories to `path`, one row per (replicate, grid time).
pub fn write_trajectories<'a>(
    path: &Path,
    k: usize,
    paths: impl IntoIterator<Item = &'a Trajectory>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trajectory_header(k))?;
    let mut row = Vec::with_capacity(k + 2);
    for path in paths {
        for (t, counts) in path.iter() {
            row.clear();
            row.push(path.replicate.to_string());
            row.push(format_number(t));
            row.extend(counts.iter().map(u64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
