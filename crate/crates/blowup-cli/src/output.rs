//! CSV tables and JSON reports. Floats are written with 17 significant
//! digits so that every value reads back bit for bit.

use crate::Failure;
use serde::Serialize;
use std::io::{self, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn parse(s: &str) -> Self {
        // floats are always written with an exponent, so plain digits are integers
        if s.is_empty() {
            Cell::Missing
        } else if let Ok(i) = s.parse() {
            Cell::Int(i)
        } else {
            s.parse().map_or_else(|_| Cell::Text(s.to_string()), Cell::Num)
        }
    }
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn write<W: Write>(&self, w: W) -> Result<(), Failure> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.headers)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::render))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, Failure> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read<R: io::Read>(r: R) -> Result<Self, Failure> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            rows.push(rec?.iter().map(Cell::parse).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self, Failure> {
        let f = std::fs::File::open(path).map_err(|e| Failure::usage(format!("cannot open {}: {e}", path.display())))?;
        Self::read(f)
    }
}

struct Sci17;

impl serde_json::ser::Formatter for Sci17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            w.write_all(format_f64(v).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }
}

/// Compact JSON, floats at 17 significant digits. Non-finite floats become null.
pub fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci17);
    v.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("json output is utf-8"))
}
