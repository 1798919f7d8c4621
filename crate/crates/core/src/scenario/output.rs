//! Artifact formats: JSON manifest, CSV tables and `FACETFLOW-GRID v1` snapshots.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    /// Signed slack; negative when the check fails.
    pub margin: f64,
}

impl Check {
    /// `value <= bound`
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.to_string(), passed: value <= bound, value, bound, margin: bound - value }
    }

    /// `value >= bound`
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.to_string(), passed: value >= bound, value, bound, margin: value - bound }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Check { name: name.to_string(), passed: ok, value: v, bound: 1.0, margin: v - 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table { file: file.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(&self.file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&v| fmt_f64(v))).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub file: String,
    pub time: f64,
    pub data: GridFunction,
}

/// Header line, size line, then one row of `N` values per line.
pub fn snapshot_text(u: &GridFunction, t: f64) -> String {
    let g = u.grid();
    let n = g.resolution();
    let mut out = format!("FACETFLOW-GRID v1\nn={} N={} t={}\n", g.dim(), n, fmt_f64(t));
    for row in u.values().chunks(n) {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_snapshot(text: &str) -> Result<(GridFunction, f64)> {
    let bad = |m: &str| Error::Config(format!("snapshot: {m}"));
    let mut lines = text.lines();
    if lines.next() != Some("FACETFLOW-GRID v1") {
        return Err(bad("missing header"));
    }
    let meta = lines.next().ok_or_else(|| bad("missing size line"))?;
    let mut fields = BTreeMap::new();
    for part in meta.split_whitespace() {
        let (k, v) = part.split_once('=').ok_or_else(|| bad("malformed size line"))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
    let dim: usize = get("n")?.parse().map_err(|_| bad("n"))?;
    let n: usize = get("N")?.parse().map_err(|_| bad("N"))?;
    let t: f64 = get("t")?.parse().map_err(|_| bad("t"))?;
    let values: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(|s| s.parse::<f64>().map_err(|_| bad("value")))
        .collect::<Result<_>>()?;
    Ok((GridFunction::new(Grid::new(dim, n)?, values)?, t))
}

impl Snapshot {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(&self.file);
        fs::write(&path, snapshot_text(&self.data, self.time))?;
        Ok(path)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub kind: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub status: String,
    pub error: Option<String>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub exit_code: i32,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
