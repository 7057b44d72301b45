//! Artifact writers. CSV files carry a header row, use `.` as decimal
//! separator and end every row with `\n`. JSON keys follow struct field
//! order, so the layout is stable across runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal form; never locale dependent.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Collects the files of one run and records their checksums.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            checksums: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn checksums(&self) -> &BTreeMap<String, String> {
        &self.checksums
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.checksums.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        self.write_bytes(name, table.to_csv().as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `manifest.json` last; it is not listed in its own checksums.
    pub fn finish<T: Serialize>(self, manifest: &T) -> Result<PathBuf, CliError> {
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(format!("manifest.json: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
