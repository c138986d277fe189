//! CSV with a `# key = value` header block echoing run parameters.
//!
//! Floats are written with Rust's shortest round-trip formatting, so output
//! files are deterministic and parse back to the exact values.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn write_table(
    path: &Path,
    meta: &[(String, String)],
    columns: &[&str],
    rows: &mut dyn Iterator<Item = Vec<f64>>,
) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for (k, v) in meta {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let mut first = true;
        for v in row {
            if !first {
                write!(w, ",")?;
            }
            write!(w, "{v}")?;
            first = false;
        }
        writeln!(w)?;
    }
    w.flush()
}

#[derive(Debug, Clone)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_table(path: &Path) -> io::Result<Table> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut meta = BTreeMap::new();
    let mut columns: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if columns.is_empty() {
            columns = line.split(',').map(|c| c.trim().to_string()).collect();
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match row {
            Ok(row) if row.len() == columns.len() => rows.push(row),
            Ok(row) => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("row has {} fields, expected {}", row.len(), columns.len()),
                ))
            }
            Err(e) => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("bad number in row: {e}"),
                ))
            }
        }
    }
    Ok(Table { meta, columns, rows })
}
