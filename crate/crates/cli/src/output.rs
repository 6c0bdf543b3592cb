//! CSV and JSON artifacts.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), which is
//! enough for every `f64` to survive a text round trip bit-exactly. Lines end
//! in `\n` regardless of platform.

use std::fmt::Write as _;
use std::path::Path;

use cor_forge::EvolutionResult;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// `t`, then `name_re,name_im` for every tracked scalar, then every
    /// diagnostic series.
    pub fn from_result<S>(result: &EvolutionResult<S>) -> Self {
        let mut columns = vec!["t".to_string()];
        for s in &result.tracked {
            columns.push(format!("{}_re", s.name));
            columns.push(format!("{}_im", s.name));
        }
        columns.extend(result.diagnostics.iter().map(|s| s.name.clone()));
        let mut table = Table::new(columns);
        for (k, &t) in result.times.iter().enumerate() {
            let mut row = vec![t];
            for s in &result.tracked {
                row.push(s.values[k].re);
                row.push(s.values[k].im);
            }
            row.extend(result.diagnostics.iter().map(|s| s.values[k]));
            table.push(row);
        }
        table
    }

    pub fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", format_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_file(path, self.render().as_bytes())
    }

    /// Inverse of [`Table::render`].
    pub fn parse(text: &str) -> Option<Self> {
        let mut lines = text.split_terminator('\n');
        let columns: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
        let mut table = Table::new(columns);
        for line in lines {
            let row = line.split(',').map(|v| v.parse::<f64>().ok()).collect::<Option<Vec<_>>>()?;
            if row.len() != table.columns.len() {
                return None;
            }
            table.rows.push(row);
        }
        Some(table)
    }
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the trajectory diagnostics of `result` as CSV.
pub fn emit_csv<S>(result: &EvolutionResult<S>, path: &Path) -> CliResult<()> {
    if result.times.is_empty() {
        return Err(CliError::Usage("refusing to write an empty result".into()));
    }
    Table::from_result(result).write(path)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}
