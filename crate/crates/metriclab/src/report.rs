//! Reports and their on-disk form.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    /// Floats carry 17 significant digits so the CSV round-trips exactly.
    fn csv_text(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) if x.is_finite() => serializer.serialize_f64(*x),
            Cell::Num(_) => serializer.serialize_none(),
            Cell::Int(i) => serializer.serialize_i64(*i),
            Cell::Bool(b) => serializer.serialize_bool(*b),
            Cell::Text(s) => serializer.serialize_str(s),
        }
    }
}

/// Per-sample rows. The last column is always `error`, empty on success.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        let mut columns = columns;
        columns.push("error".into());
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, mut cells: Vec<Cell>, error: Option<String>) {
        cells.push(Cell::Text(error.unwrap_or_default()));
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column over rows without errors.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let Some(k) = self.column(name) else { return Vec::new() };
        self.ok_rows().filter_map(|r| r[k].as_f64()).collect()
    }

    pub fn ok_rows(&self) -> impl Iterator<Item = &Vec<Cell>> {
        let e = self.columns.len() - 1;
        self.rows.iter().filter(move |r| matches!(&r[e], Cell::Text(s) if s.is_empty()))
    }

    pub fn error_count(&self) -> usize {
        self.rows.len() - self.ok_rows().count()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Table", 2)?;
        s.serialize_field("columns", &self.columns)?;
        s.serialize_field("rows", &self.rows)?;
        s.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// A negative control behaved as expected.
    ExpectedFail,
    /// Holds, but only relative to an estimated quantity.
    Conditional,
}

impl Status {
    pub fn is_pass(self) -> bool {
        self != Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub assertion: String,
    pub tolerance: f64,
    pub observed: f64,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(assertion: &str, tolerance: f64, observed: f64, holds: bool, detail: impl Into<String>) -> Self {
        Verdict {
            assertion: assertion.to_string(),
            tolerance,
            observed,
            status: if holds { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    pub fn with_status_on_hold(mut self, status: Status) -> Self {
        if self.status == Status::Pass {
            self.status = status;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub anchor: &'static str,
    pub config: ExperimentConfig,
    pub summary: Map<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub diagnostics: Map<String, Value>,
    pub notes: Vec<String>,
    pub samples: Table,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.status.is_pass())
    }

    pub fn failed(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.status.is_pass()).collect()
    }

    /// Every row errored: nothing was measured.
    pub fn numerical_failure(&self) -> bool {
        !self.samples.rows.is_empty() && self.samples.error_count() == self.samples.rows.len()
    }

    pub fn verdict(&self, assertion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.assertion == assertion)
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// Process exit status: 0 pass, 1 assertion failure, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.numerical_failure() {
            3
        } else if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Writes `report.json` and `samples.csv` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let json_path = dir.join("report.json");
    let csv_path = dir.join("samples.csv");
    let mut text = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(&json_path, text)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&report.samples.columns).map_err(io::Error::other)?;
    for row in &report.samples.rows {
        w.write_record(row.iter().map(Cell::csv_text)).map_err(io::Error::other)?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    fs::File::create(&csv_path)?.write_all(&bytes)?;
    Ok((json_path, csv_path))
}
