//! CSV tables: one header line, LF endings, floats at 12 significant digits.

use std::io::Write;
use std::path::Path;

use stochill_core::OrbitTrace;

use crate::error::{AppError, AppResult};

/// Formats `x` with 12 significant digits, fixed-point for moderate
/// magnitudes and scientific otherwise.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let (mant, e) = sci.split_at(sci.find('e').unwrap());
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}{e}")
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Num(x) => fmt_float(*x),
            Self::Int(n) => n.to_string(),
            Self::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Num(x) => Some(*x),
            Self::Int(n) => Some(*n as f64),
            Self::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Self::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

/// A header plus rows of cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn write_to<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("cells are UTF-8")
    }

    pub fn save(&self, path: &Path) -> AppResult<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| AppError::Write { path: path.into(), source })
    }
}

fn read_numeric_csv(path: &Path, expected: &[&str]) -> AppResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| AppError::Read { path: path.into(), source })?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| AppError::config(format!("{}: {e}", path.display())))?.clone();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(AppError::config(format!("{}: expected header `{}`", path.display(), expected.join(","))));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| AppError::config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AppError::config(format!("{}: row {}: {e}", path.display(), line + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Orbit trace with header `t,x,z`.
pub fn read_trace(path: &Path) -> AppResult<OrbitTrace> {
    let rows = read_numeric_csv(path, &["t", "x", "z"])?;
    Ok(OrbitTrace::new(rows.into_iter().map(|r| [r[0], r[1], r[2]]).collect())?)
}

/// Barrier table with header `t,value`.
pub fn read_barrier_samples(path: &Path) -> AppResult<Vec<(f64, f64)>> {
    Ok(read_numeric_csv(path, &["t", "value"])?.into_iter().map(|r| (r[0], r[1])).collect())
}
