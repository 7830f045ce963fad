use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Unasserted checks are reported but do not change the exit code.
    pub asserted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: &str, passed: bool) -> Self {
        Check { name: name.into(), passed, asserted: true, value: None, detail: None }
    }

    pub fn info(name: &str, passed: bool) -> Self {
        Check { asserted: false, ..Check::new(name, passed) }
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub eigen: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub parameters: Value,
    pub version: String,
    pub tolerances: Tolerances,
    pub wall_time_s: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Plain CSV table; numbers are written with 17 significant digits.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_number(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Empty => String::new(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Writes the result. JSON output embeds the manifest; CSV output is
/// accompanied by it, in `<path>.manifest.json` or on stderr.
pub fn emit(
    format: Format,
    path: Option<&Path>,
    manifest: &RunManifest,
    result: Value,
    table: Option<Table>,
) -> std::io::Result<()> {
    let manifest_json = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    let body = match format {
        Format::Json => {
            let doc = serde_json::json!({ "manifest": manifest, "result": result });
            let mut s = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
            s.push('\n');
            s
        }
        Format::Csv => match table {
            Some(t) => t.to_csv(),
            None => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    "this command has no CSV form; use --out json",
                ))
            }
        },
    };
    match path {
        Some(p) => {
            fs::write(p, body)?;
            if format == Format::Csv {
                let mut side = p.as_os_str().to_owned();
                side.push(".manifest.json");
                fs::write(side, manifest_json + "\n")?;
            }
        }
        None => {
            std::io::stdout().lock().write_all(body.as_bytes())?;
            if format == Format::Csv {
                eprintln!("{manifest_json}");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip_bitwise() {
        for v in [0.1, 1.0 / 3.0, 2.538_718_286_161_937, -1e-300, 6.02e23] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        let t = Table {
            header: vec!["a", "b", "c"],
            rows: vec![vec![Cell::from(1.5), Cell::from(None), Cell::from(true)]],
        };
        assert_eq!(t.to_csv(), "a,b,c\n1.5000000000000000e0,,true\n");
    }
}
