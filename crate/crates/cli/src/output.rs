//! CSV artifacts and the run manifest.
//!
//! Every artifact is assembled in memory and only written once the whole run
//! has succeeded, so a failing run leaves no files behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Identity of a run: digest of command, code version and canonical config.
/// `output_dir` is left out so relocating a run keeps its artifacts identical.
pub fn run_hash(command: &str, config: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(b"\n");
    h.update(hashed_config(config).as_bytes());
    format!("{:x}", h.finalize())
}

pub(crate) fn hashed_config(config: &RunConfig) -> String {
    config
        .to_text()
        .lines()
        .filter(|l| !l.starts_with("output_dir "))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Text of one CSV file.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(hash: &str, columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# manifest {hash}");
        let _ = writeln!(text, "# units: dimensionless (m = hbar = 1)");
        let _ = writeln!(text, "{}", columns.join(","));
        Self { text }
    }

    /// Header row given as values (dense matrices).
    pub fn with_header_values(hash: &str, first: &str, values: &[f64]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# manifest {hash}");
        let _ = writeln!(text, "# units: dimensionless (m = hbar = 1)");
        text.push_str(first);
        for v in values {
            let _ = write!(text, ",{}", fmt_num(*v));
        }
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, values: &[f64]) {
        let line: Vec<String> = values.iter().map(|v| fmt_num(*v)).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn raw_row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Shortest round-trip form; `nan` marks undefined entries.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        }
    }
}

/// Everything a successful run produces, not yet on disk.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub results: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Artifacts {
    pub fn add_csv(&mut self, name: &str, csv: Csv) {
        self.files.push((name.into(), csv.text));
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub hash: &'a str,
    pub wall_seconds: f64,
}

pub fn manifest_text(info: &ManifestInfo<'_>, artifacts: &Artifacts) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "# bosetunnel run manifest");
    let _ = writeln!(m, "command = {}", info.command);
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "hash = {}", info.hash);
    if info.config.deterministic {
        let _ = writeln!(m, "wall_time = not recorded (deterministic)");
    } else {
        let _ = writeln!(m, "wall_time = {:.3}", info.wall_seconds);
    }
    for line in info.config.to_text().lines() {
        let _ = writeln!(m, "config.{line}");
    }
    for (k, v) in &artifacts.results {
        let _ = writeln!(m, "result.{k} = {v}");
    }
    for c in &artifacts.checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
        };
        let _ = writeln!(m, "check.{} = {status} ({})", c.name, c.detail);
    }
    for (name, _) in &artifacts.files {
        let _ = writeln!(m, "file = {name}");
    }
    m
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write all artifacts, then the manifest.
pub fn write_run(dir: &Path, info: &ManifestInfo<'_>, artifacts: &Artifacts) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    for (name, text) in &artifacts.files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest_text(info, artifacts)).map_err(|e| io_error(&path, e))?;
    Ok(path)
}
