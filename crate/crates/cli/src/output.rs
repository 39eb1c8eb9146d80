//! Result envelopes, CSV tables and writing them out.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// A labelled table. Numbers are written with Rust's shortest round-trip
/// formatting, which always uses `.` as the decimal separator.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Every JSON artifact is wrapped in this.
#[derive(Debug, Serialize)]
pub struct ResultEnvelope<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a Value,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub payload: &'a Value,
}

pub fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn envelope_json(command: &str, config: &Value, payload: &Value) -> String {
    let env = ResultEnvelope {
        tool: "coten",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        timestamp: timestamp(),
        payload,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("serializable envelope");
    s.push('\n');
    s
}

/// `#`-prefixed header lines carrying the same metadata as the envelope, so
/// that CSV files are self-describing too.
pub fn csv_preamble(command: &str, config: &Value) -> String {
    format!(
        "# tool: coten {}\n# command: {command}\n# timestamp: {}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        timestamp(),
        config
    )
}

/// An output file opened before any work starts, so an unwritable path
/// fails immediately.
pub struct Sink {
    path: PathBuf,
    file: File,
}

impl Sink {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let file = File::create(path)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn write(mut self, text: &str) -> Result<(), CliError> {
        self.file
            .write_all(text.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", self.path.display())))
    }
}

pub fn stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Output(format!("cannot write to standard output: {e}")))
}
