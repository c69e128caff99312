//! CSV tables, gnuplot data blocks and the JSON run manifest.
//!
//! Floats are written with 12 significant digits in exponent form so that
//! re-running a configuration reproduces every table byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
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

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(i64::from(x))
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// 12 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0.00000000000e0"
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

/// Quotes fields containing separators, quotes or line breaks.
fn csv_field(s: String) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_field(c.render())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Gnuplot data file: blocks separated by two blank lines, addressable with `index`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GnuplotData {
    blocks: Vec<(String, Table)>,
}

impl GnuplotData {
    pub fn push(&mut self, title: impl Into<String>, table: Table) {
        self.blocks.push((title.into(), table));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (title, table)) in self.blocks.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {title}");
            let _ = writeln!(out, "# {}", table.header.join(" "));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::render).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
        out
    }
}

/// Everything one experiment produces, written in insertion order.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    pub gnuplot: Vec<(String, GnuplotData)>,
    pub json: Vec<(String, serde_json::Value)>,
}

impl Artifacts {
    pub fn table(&mut self, name: impl Into<String>, table: Table) {
        self.tables.push((name.into(), table));
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, table) in &self.tables {
            let path = dir.join(name);
            fs::write(&path, table.to_csv())?;
            written.push(path);
        }
        for (name, data) in &self.gnuplot {
            let path = dir.join(name);
            fs::write(&path, data.render())?;
            written.push(path);
        }
        for (name, value) in &self.json {
            let path = dir.join(name);
            fs::write(&path, serde_json::to_string_pretty(value).map_err(std::io::Error::other)? + "\n")?;
            written.push(path);
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub cm_to_k: f64,
    pub mu_b_over_k_b: f64,
    pub hbar_over_k_b_ps: f64,
}

impl Constants {
    pub fn current() -> Self {
        use spin_triangle::units::*;
        Self { cm_to_k: CM_TO_K, mu_b_over_k_b: MU_B_OVER_K_B, hbar_over_k_b_ps: HBAR_OVER_K_B_PS }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub experiment: String,
    pub version: &'static str,
    pub config: &'a C,
    pub constants: Constants,
    pub parallel: bool,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<&'a [crate::reference::CheckLine]>,
}
