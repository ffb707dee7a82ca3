//! Runs a list of experiments and aggregates their headline lines.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_OK};
use crate::output::{run_and_write, write_document, SCHEMA_VERSION};
use crate::spec::{CommandKind, ExperimentSpec, Params};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub specs: Vec<ExperimentSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub command: CommandKind,
    pub output: PathBuf,
    pub exit_code: u8,
    pub summary: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub schema_version: u32,
    pub entries: Vec<SuiteEntry>,
    pub headline: Vec<String>,
    pub exit_code: u8,
}

pub fn load(path: &Path) -> Result<SuiteConfig, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// `default_dir` is used when the config does not name an output directory.
pub fn run_suite(cfg: &SuiteConfig, default_dir: &Path) -> SuiteSummary {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| default_dir.to_path_buf());
    let runs: Vec<(SuiteEntry, Vec<String>)> = cfg
        .specs
        .par_iter()
        .enumerate()
        .map(|(k, spec)| {
            let out = match &spec.output_path {
                Some(p) if p.is_absolute() => p.clone(),
                Some(p) => dir.join(p),
                None => dir.join(format!("{k:02}_{}.json", spec.command.name())),
            };
            let params = Params::from_map(spec.command, &spec.params);
            let doc = run_and_write(spec.command, params, spec.seed, &out);
            let entry =
                SuiteEntry { command: spec.command, output: out, exit_code: doc.exit_code(), summary: doc.summary.clone() };
            (entry, doc.headline)
        })
        .collect();
    let mut headline: Vec<String> = Vec::new();
    for line in runs.iter().flat_map(|(_, h)| h) {
        if !headline.contains(line) {
            headline.push(line.clone());
        }
    }
    let entries: Vec<SuiteEntry> = runs.into_iter().map(|(e, _)| e).collect();
    let exit_code = entries.iter().map(|e| e.exit_code).max().unwrap_or(EXIT_OK);
    SuiteSummary { schema_version: SCHEMA_VERSION, entries, headline, exit_code }
}

pub fn write_summary(dir: &Path, s: &SuiteSummary) -> Result<PathBuf, CliError> {
    let path = dir.join("summary.json");
    write_document(&path, s)?;
    Ok(path)
}
