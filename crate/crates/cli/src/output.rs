//! CSV tables and the run manifest.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn freq_label(n: &[i64]) -> String {
    n.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: &'static [&'static str]) -> Self {
        Self {
            file,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
    pub sha256: String,
}

/// Writes `# config_sha256=<digest>` followed by the header and rows.
pub fn write_table(dir: &Path, digest: &str, table: &Table) -> Result<FileEntry, CliError> {
    let mut buf = format!("# config_sha256={digest}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(table.header).map_err(io_error)?;
        for row in &table.rows {
            w.write_record(row).map_err(io_error)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let path = dir.join(table.file);
    std::fs::write(&path, &buf).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(FileEntry {
        name: table.file.to_string(),
        rows: table.rows.len(),
        sha256: hex::encode(Sha256::digest(&buf)),
    })
}

fn io_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    #[serde(rename = "N")]
    pub n: usize,
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config_digest: String,
    pub n_values: Vec<usize>,
    pub stages: Vec<Stage>,
    pub residuals: Vec<Residual>,
    pub summary: Vec<(String, f64)>,
    pub warnings: Vec<String>,
    pub tolerance_failures: Vec<String>,
    pub files: Vec<FileEntry>,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
    let path = dir.join("manifest.json");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        let s = num(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn table_carries_digest() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("x.csv", &["N", "v"]);
        t.push(vec!["3".into(), num(1.5)]);
        let entry = write_table(dir.path(), "abc", &t).unwrap();
        let text = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
        assert_eq!(text, "# config_sha256=abc\nN,v\n3,1.5000000000000000e0\n");
        assert_eq!(entry.rows, 1);
        assert_eq!(freq_label(&[1, -2, 0]), "1;-2;0");
    }
}
