//! Output files.
//!
//! CSV tables start with `# key=value` provenance lines followed by a normal
//! header row; JSON mirrors carry the same fields under `provenance`. Floats
//! use Rust's shortest round-trip formatting, so identical inputs give
//! identical bytes.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub seed: u64,
    pub n_paths: usize,
    pub days_per_year: f64,
    pub monte_carlo: bool,
}

impl Provenance {
    fn lines(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| out.push_str(&format!("# {k}={v}\n"));
        push("tool", self.tool.to_string());
        push("version", self.version.to_string());
        push("command", self.command.clone());
        if let Some(h) = &self.config_sha256 {
            push("config_sha256", h.clone());
        }
        if let Some(h) = &self.input_sha256 {
            push("input_sha256", h.clone());
        }
        push("seed", self.seed.to_string());
        push("n_paths", self.n_paths.to_string());
        push("days_per_year", self.days_per_year.to_string());
        push("monte_carlo", self.monte_carlo.to_string());
        out
    }
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, prov: &Provenance) -> Result<Vec<u8>> {
        let mut buf = prov.lines().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

/// Formats a float; `None` becomes an empty cell.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct Mirror<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

pub fn to_json<T: Serialize>(prov: &Provenance, body: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Mirror { provenance: prov, body })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `(file name, bytes)` pairs into `dir`, creating it if needed.
pub fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    files
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        })
        .collect()
}
