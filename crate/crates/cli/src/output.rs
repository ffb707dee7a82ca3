//! Result documents and CSV files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, EXIT_OK};
use crate::run::{execute, Table};
use crate::spec::{CommandKind, Params};

pub const SCHEMA_VERSION: u32 = 1;

/// Fields excluded from reproducibility comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub timestamp_unix: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub command: CommandKind,
    pub seed: u64,
    pub config: Value,
    pub result: Value,
    pub error: Value,
    pub summary: String,
    pub headline: Vec<String>,
    pub csv: Vec<PathBuf>,
    pub sidecar: Sidecar,
}

impl ResultDocument {
    pub fn exit_code(&self) -> u8 {
        self.error.get("exit_code").and_then(Value::as_u64).map_or(EXIT_OK, |c| c as u8)
    }
}

pub fn default_output(kind: CommandKind) -> PathBuf {
    PathBuf::from("results").join(format!("{}.json", kind.name()))
}

fn csv_path(json_path: &Path, suffix: &str) -> PathBuf {
    let stem = json_path.file_stem().and_then(|s| s.to_str()).unwrap_or("result");
    json_path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn write_table(path: &Path, t: &Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&t.header)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Runs one experiment and writes its result document and tables.
///
/// `params` is `Err` when validation failed; a document is still written.
pub fn run_and_write(
    kind: CommandKind,
    params: Result<Params, CliError>,
    seed: u64,
    out: &Path,
) -> ResultDocument {
    let start = Instant::now();
    let mut doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        command: kind,
        seed,
        config: Value::Null,
        result: Value::Null,
        error: Value::Null,
        summary: String::new(),
        headline: Vec::new(),
        csv: Vec::new(),
        sidecar: Sidecar { timestamp_unix: now_unix(), elapsed_seconds: 0.0 },
    };
    let outcome = params.and_then(|p| {
        doc.config = p.to_value();
        execute(&p, seed)
    });
    match outcome {
        Ok(o) => {
            doc.result = o.result;
            doc.summary = o.summary;
            doc.headline = o.headline;
            if let Some(parent) = out.parent() {
                let _ = fs::create_dir_all(parent);
            }
            for t in &o.tables {
                let path = csv_path(out, &t.suffix);
                match write_table(&path, t) {
                    Ok(()) => doc.csv.push(path),
                    Err(e) => {
                        doc.error = e.to_json();
                        break;
                    }
                }
            }
            if let Some(f) = o.failure {
                doc.error = f.to_json();
                doc.summary = format!("{} [{}]", doc.summary, f);
            }
        }
        Err(e) => {
            doc.summary = e.to_string();
            doc.error = e.to_json();
        }
    }
    doc.sidecar.elapsed_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = write_document(out, &doc) {
        doc.error = e.to_json();
    }
    doc
}

pub fn write_document<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(doc).expect("document serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
