//! Report assembly and emission.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// What a command produced before it is wrapped into a report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
    pub assertions: Vec<Assertion>,
    /// Results of `--verify`.
    pub verification: Vec<Assertion>,
    /// Extra JSON files, by name.
    pub attachments: Vec<(String, Value)>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    seed: u64,
    config: &'a Value,
    verification: &'a [Assertion],
    assertions: &'a [Assertion],
    passed: bool,
    result: &'a Value,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// A `#` line carrying the seed and resolved config, then the table.
fn csv_bytes(command: &str, seed: u64, config: &Value, table: &Table) -> Result<Vec<u8>> {
    let mut out = format!("# racxpt {command} seed={seed} config={}\n", serde_json::to_string(config)?).into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    out.extend(w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))?);
    Ok(out)
}

/// Writes `<command>.json`, `<command>.csv` and attachments under `out`;
/// returns the written paths and whether every assertion held.
pub fn emit(
    out: &Path,
    command: &str,
    seed: u64,
    config: &Value,
    outcome: &Outcome,
) -> Result<(Vec<PathBuf>, bool)> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io { path: out.to_path_buf(), source: e })?;
    let verification = &outcome.verification;
    let passed = verification.iter().chain(&outcome.assertions).all(|a| a.passed);
    let report = Report {
        command,
        seed,
        config,
        verification,
        assertions: &outcome.assertions,
        passed,
        result: &outcome.result,
    };
    let mut paths = Vec::new();
    let json = out.join(format!("{command}.json"));
    write_file(&json, format!("{}\n", serde_json::to_string_pretty(&report)?).as_bytes())?;
    paths.push(json);
    if let Some(t) = &outcome.table {
        let csv = out.join(format!("{command}.csv"));
        write_file(&csv, &csv_bytes(command, seed, config, t)?)?;
        paths.push(csv);
    }
    for (name, value) in &outcome.attachments {
        let p = out.join(name);
        write_file(&p, format!("{}\n", serde_json::to_string_pretty(value)?).as_bytes())?;
        paths.push(p);
    }
    Ok((paths, passed))
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:.6e}")
}
