//! Tables, number formatting and CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::{CliError, Result};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    /// A number, or an empty cell when absent.
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(format_float(*v)),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::text(if v { "true" } else { "false" })
    }
}

/// Nine significant digits; fixed notation for moderate magnitudes.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let v = if v == 0.0 { 0.0 } else { v };
    let sci = format!("{v:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..=8).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, v)
    } else {
        sci
    }
}

/// Named table; the name doubles as the CSV file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Two-column key/value table.
    pub fn summary(entries: Vec<(&'static str, Cell)>) -> Self {
        let mut t = Self::new("summary", &["key", "value"]);
        for (k, v) in entries {
            t.push(vec![Cell::text(k), v]);
        }
        t
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    fn to_json(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// Output of one command. The first table is the primary one.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Summary value for `key`, if the report has a summary table.
    pub fn summary_value(&self, key: &str) -> Option<&Cell> {
        self.table("summary")?
            .rows
            .iter()
            .find(|r| matches!(&r[0], Cell::Text(k) if k == key))
            .map(|r| &r[1])
    }

    pub fn to_json(&self) -> Value {
        let mut tables = serde_json::Map::new();
        for t in &self.tables {
            tables.insert(t.name.to_string(), t.to_json());
        }
        json!({ "command": self.command, "tables": tables })
    }

    /// Writes every table into `dir` (CSV) or `report.json`, or the primary
    /// table (CSV) or the whole report (JSON) to `stdout` when `dir` is absent.
    pub fn emit<W: Write>(&self, format: Format, dir: Option<&Path>, stdout: W) -> Result<()> {
        match (format, dir) {
            (Format::Csv, None) => self.tables[0].write_csv(stdout),
            (Format::Json, None) => write_json(&self.to_json(), stdout, "stdout"),
            (_, Some(dir)) => {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
                    path: dir.display().to_string(),
                    source,
                })?;
                match format {
                    Format::Csv => {
                        for t in &self.tables {
                            let path = dir.join(format!("{}.csv", t.name));
                            t.write_csv(create(&path)?)?;
                        }
                    }
                    Format::Json => {
                        let path = dir.join("report.json");
                        write_json(&self.to_json(), create(&path)?, &path.display().to_string())?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })
}

fn write_json<W: Write>(value: &Value, mut out: W, path: &str) -> Result<()> {
    let io = |source| CliError::Write {
        path: path.to_string(),
        source,
    };
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io(e.into()))?;
    writeln!(out).map_err(io)?;
    out.flush().map_err(io)
}
