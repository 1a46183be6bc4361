//! CSV tables with a `#` header block, JSON reports and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const UNITS: &str = "hbar = k_B = 1; frequencies in omega_0; times in 1/omega_0";

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(&'static str),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Self::Int(x as i64)
    }
}

impl From<&'static str> for Cell {
    fn from(x: &'static str) -> Self {
        Self::Text(x)
    }
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub notes: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), notes: Vec::new(), rows: Vec::new() }
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self { name: name.into(), columns, notes: Vec::new(), rows: Vec::new() }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, header: &Header) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {}", header.artifact, header.version);
        let _ = writeln!(s, "# task: {}", header.task);
        let _ = writeln!(s, "# config_sha256: {}", header.hash);
        let _ = writeln!(s, "# units: {UNITS}");
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Num(x) => s.push_str(&fmt_num(*x)),
                    Cell::Int(k) => {
                        let _ = write!(s, "{k}");
                    }
                    Cell::Text(t) => s.push_str(t),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Everything a task produces.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub reports: Vec<(String, Value)>,
}

struct Header<'a> {
    artifact: &'a str,
    version: &'a str,
    task: &'a str,
    hash: &'a str,
}

pub fn config_hash(config: &Value) -> String {
    let canonical = serde_json::to_string(config).expect("JSON values serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes tables, reports and `manifest.json` into `dir`; returns the written paths.
pub fn write_all(dir: &Path, task: &str, config: &Value, grid: Value, artifacts: &Artifacts) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let hash = config_hash(config);
    let header = Header { artifact: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION"), task, hash: &hash };
    let mut written = Vec::new();
    let mut files = Vec::new();
    for t in &artifacts.tables {
        let name = format!("{}.csv", t.name);
        let path = dir.join(&name);
        write_file(&path, &t.render(&header))?;
        files.push(name);
        written.push(path);
    }
    for (name, report) in &artifacts.reports {
        let name = format!("{name}.json");
        let path = dir.join(&name);
        let body = serde_json::to_string_pretty(report).expect("JSON values serialize");
        write_file(&path, &(body + "\n"))?;
        files.push(name);
        written.push(path);
    }
    let manifest = json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "task": task,
        "config_sha256": hash,
        "config": config,
        "grid": grid,
        "units": UNITS,
        "outputs": files,
    });
    let path = dir.join("manifest.json");
    write_file(&path, &(serde_json::to_string_pretty(&manifest).expect("JSON values serialize") + "\n"))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_has_seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NAN), "nan");
        let x: f64 = fmt_num(std::f64::consts::PI).parse().unwrap();
        assert_eq!(x, std::f64::consts::PI);
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"a": 1, "b": [1, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b": [1, 2], "a": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
    }
}
