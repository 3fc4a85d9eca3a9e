//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

/// One CSV cell.
pub enum Cell {
    Int(usize),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

/// Renders rows as CSV text, for printing.
pub fn csv_string(header: &[&str], rows: &[Vec<Cell>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct Summary<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    generated_unix: u64,
    seed: u64,
    config: &'a C,
    results: &'a R,
}

/// Writes `summary.json`. The generation time is the only field that
/// varies between identical runs.
pub fn write_summary<C: Serialize, R: Serialize>(
    dir: &Path,
    command: &str,
    seed: u64,
    config: &C,
    results: &R,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let generated_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let s = Summary {
        command,
        generated_unix,
        seed,
        config,
        results,
    };
    let text = serde_json::to_string_pretty(&s)?;
    fs::write(dir.join("summary.json"), text + "\n")?;
    Ok(())
}
