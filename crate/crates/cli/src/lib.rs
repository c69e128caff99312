//! Command-line experiment runner for `spin-triangle`.
//!
//! Each subcommand reads an optional TOML config, runs one experiment,
//! writes CSV/gnuplot/JSON files plus `manifest.json` into the output
//! directory, and with `--check` compares anchor quantities against the
//! bundled reference values.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod reference;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, RunConfig};
pub use error::CliError;
use output::{Constants, Manifest, Table};
use reference::{compare_reference, records_for, CheckLine};

pub const DEFAULT_OUTPUT_DIR: &str = "results";

/// Output directory: command line (or its environment variable, which clap
/// folds into the same argument) over the config file over the default.
pub fn resolve_output_dir(cli: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    cli.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Config from `path`, or the defaults for `experiment`; validated either way.
pub fn load_config(experiment: Experiment, path: Option<&Path>) -> Result<RunConfig, CliError> {
    let config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default_for(experiment),
    };
    config.validate(experiment)?;
    Ok(config)
}

#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub checks: Option<Vec<CheckLine>>,
}

impl RunSummary {
    pub fn failed_checks(&self) -> usize {
        self.checks.as_ref().map_or(0, |c| c.iter().filter(|l| !l.pass).count())
    }
}

/// Runs one experiment and writes its files. Reference failures are reported
/// in the summary, not as an error; see [`check_outcome`].
pub fn run(experiment: Experiment, config: &RunConfig, check: bool, out_dir: &Path) -> Result<RunSummary, CliError> {
    config.validate(experiment)?;
    let start = Instant::now();
    let mut artifacts = experiments::run(experiment, config)?;
    let checks = if check {
        let results = experiments::reference_results(experiment, &config.model, config.execution)?;
        let lines = compare_reference(&results, &records_for(experiment))?;
        let mut t = Table::new(&["name", "kind", "measured", "expected", "tolerance", "pass", "provenance"]);
        for l in &lines {
            t.push(vec![
                l.name.as_str().into(),
                l.kind.label().into(),
                l.measured.into(),
                l.expected.into(),
                l.tolerance.map_or_else(|| "-".into(), Into::into),
                l.pass.to_string().into(),
                l.provenance.as_str().into(),
            ]);
        }
        artifacts.table("checks.csv", t);
        Some(lines)
    } else {
        None
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let mut files = artifacts.write(out_dir)?;
    let manifest_path = out_dir.join("manifest.json");
    let manifest = Manifest {
        experiment: experiment.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        config,
        constants: Constants::current(),
        parallel: config.execution.is_parallel(),
        wall_time_s,
        files: files.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect(),
        checks: checks.as_deref(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(&manifest_path, text + "\n")?;
    files.push(manifest_path);
    Ok(RunSummary { files, checks })
}

/// `CheckFailed` when any reference comparison failed.
pub fn check_outcome(summary: &RunSummary) -> Result<(), CliError> {
    match &summary.checks {
        Some(lines) if summary.failed_checks() > 0 => {
            Err(CliError::CheckFailed { failed: summary.failed_checks(), total: lines.len() })
        }
        _ => Ok(()),
    }
}
