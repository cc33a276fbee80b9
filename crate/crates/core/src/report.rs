// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV report emission.
//!
//! Every report starts with a single `#` line naming the tool version, the
//! producing subcommand, the seed and a hash of the effective configuration,
//! followed by the configuration itself. The CSV header row comes next.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "attrgraph";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance line written at the top of every report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportHeader {
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, String>,
}

impl ReportHeader {
    pub fn new(subcommand: impl Into<String>, seed: Option<u64>, config: BTreeMap<String, String>) -> Self {
        ReportHeader {
            subcommand: subcommand.into(),
            seed,
            config,
        }
    }

    /// First 16 hex digits of SHA-256 over `key=value\n` lines in key order.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.config {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(&hasher.finalize()[..8])
    }

    pub fn line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let mut line = format!(
            "# {TOOL_NAME} {TOOL_VERSION} subcommand={} seed={seed} config_hash={}",
            self.subcommand,
            self.config_hash()
        );
        for (k, v) in &self.config {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }
}

/// A header line plus a CSV table.
#[derive(Debug, Clone)]
pub struct Report {
    pub header: ReportHeader,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(header: ReportHeader, columns: &[&str]) -> Self {
        Report {
            header,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<String> {
        let mut out = self.header.line();
        out.push('\n');
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io {
            path: "<report>".into(),
            source: e.into_error(),
        })?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.render()?).map_err(|e| Error::io(path, e))
    }
}

/// Parses a rendered report back into `(header line, columns, rows)`.
pub fn parse_report(text: &str) -> Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header.to_string(), columns, rows))
}
