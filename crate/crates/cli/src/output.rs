//! CSV and JSON emission. Every file carries the resolved scenario.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

/// One output column.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Num(Vec<f64>),
    Text(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Num(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Num(v) => format_float(v[row]),
            Column::Text(v) => v[row].clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Column::Num(v) => json!(v),
            Column::Text(v) => json!(v),
        }
    }
}

/// Named columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Column)>,
}

impl Table {
    pub fn push(&mut self, name: &str, column: Column) {
        self.columns.push((name.to_string(), column));
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self.columns.iter().map(|(n, c)| (n.clone(), c.to_json())).collect();
        Value::Object(map)
    }
}

/// 17 significant digits in scientific notation; identical inputs give identical text.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `# scenario: <json>` followed by a headed CSV table.
pub fn write_csv(path: &Path, scenario: &impl Serialize, table: &Table) -> Result<PathBuf> {
    let n = table.rows();
    if table.columns.iter().any(|(_, c)| c.len() != n) {
        return Err(CliError::Numeric(format!("{}: columns of unequal length", path.display())));
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = serde_json::to_string(scenario).map_err(|e| CliError::Numeric(e.to_string()))?;
    writeln!(out, "# scenario: {header}").map_err(|e| CliError::io(path, e))?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(table.columns.iter().map(|(name, _)| name.as_str()))
            .map_err(|e| CliError::io(path, e.into()))?;
        for row in 0..n {
            w.write_record(table.columns.iter().map(|(_, c)| c.cell(row)))
                .map_err(|e| CliError::io(path, e.into()))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(path.to_path_buf())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(path.to_path_buf())
}

/// Reads the `# scenario:` line and the table of a CSV written by [`write_csv`]
/// (or any headed CSV with `#` comments).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record?.iter().map(str::to_string).collect());
    }
    Ok((headers, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed_width_scientific() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.5), "-5.0000000000000000e-1");
        assert_eq!(format_float(f64::NAN), "NaN");
        let x = 0.1 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::default();
        t.push("x", Column::Num(vec![1.0, 2.0]));
        t.push("label", Column::Text(vec!["a".into(), "b".into()]));
        write_csv(&path, &json!({"name": "t"}), &t).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# scenario: {\"name\":\"t\"}\nx,label\n"));
        let (h, rows) = read_csv(&path).unwrap();
        assert_eq!(h, ["x", "label"]);
        assert_eq!(rows[1], ["2.0000000000000000e0", "b"]);
    }

    #[test]
    fn unequal_columns_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::default();
        t.push("x", Column::Num(vec![1.0, 2.0]));
        t.push("y", Column::Num(vec![1.0]));
        assert!(write_csv(&dir.path().join("t.csv"), &json!({}), &t).is_err());
    }
}
