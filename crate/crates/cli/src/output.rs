//! CSV tables and their JSON metadata sidecars.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::ResolvedConfig;
use crate::error::{io_error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Float(x) => format_float(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n', '\r']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// CRLF line endings per RFC 4180.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push_str("\r\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(format_cell).collect();
            let _ = write!(out, "{}\r\n", cells.join(","));
        }
        out
    }
}

/// `name.csv` -> `name.meta.json`
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Writes `table` to `dir/name` plus its sidecar; returns the CSV path.
pub fn write_table(cfg: &ResolvedConfig, name: &str, table: &Table, extra: Value) -> Result<PathBuf> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, table.to_csv()).map_err(io_error(&path))?;
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "tool": "sawtooth",
        "version": env!("CARGO_PKG_VERSION"),
        "file": name,
        "experiment": cfg.experiment,
        "config_sha256": cfg.hash(),
        "config": cfg.canonical(),
        "convention": cfg.convention.to_string(),
        "time_grid": {
            "t_max": cfg.grid.t_max(),
            "samples": cfg.grid.samples(),
            "time_unit": cfg.time_unit.to_string(),
        },
        "threads": cfg.threads(),
        "columns": table.header,
        "rows": table.rows.len(),
        "details": extra,
        "created_unix": created,
    });
    let side = sidecar_path(&path);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&side, text + "\n").map_err(io_error(&side))?;
    Ok(path)
}
