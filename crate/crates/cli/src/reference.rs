//! Published reference values and the comparison used by `--check`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::CliError;

/// Bundled reference data.
pub const REFERENCE_DATA: &str = include_str!("../data/reference.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `|measured - expected| <= tolerance`.
    TwoSided,
    /// `measured >= expected`.
    AtLeast,
    /// `measured > expected`.
    GreaterThan,
}

impl CheckKind {
    pub fn label(self) -> &'static str {
        match self {
            CheckKind::TwoSided => "two-sided",
            CheckKind::AtLeast => "at-least",
            CheckKind::GreaterThan => "greater-than",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRecord {
    pub name: String,
    pub experiment: Experiment,
    pub expected: f64,
    #[serde(default)]
    pub tolerance: Option<f64>,
    pub kind: CheckKind,
    pub provenance: String,
}

#[derive(Debug, Deserialize)]
struct ReferenceFile {
    record: Vec<ReferenceRecord>,
}

pub fn parse_records(text: &str) -> Result<Vec<ReferenceRecord>, CliError> {
    let file: ReferenceFile = toml::from_str(text).map_err(|e| CliError::Config(format!("reference data: {e}")))?;
    for r in &file.record {
        if r.kind == CheckKind::TwoSided && !r.tolerance.is_some_and(|t| t > 0.0) {
            return Err(CliError::Config(format!("reference {:?} needs a positive tolerance", r.name)));
        }
    }
    Ok(file.record)
}

pub fn bundled_records() -> Vec<ReferenceRecord> {
    parse_records(REFERENCE_DATA).expect("bundled reference data is valid")
}

pub fn records_for(experiment: Experiment) -> Vec<ReferenceRecord> {
    bundled_records().into_iter().filter(|r| r.experiment == experiment).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: Option<f64>,
    pub kind: CheckKind,
    pub pass: bool,
    pub provenance: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let target = match (self.kind, self.tolerance) {
            (CheckKind::TwoSided, Some(t)) => format!("{} ± {}", self.expected, t),
            (CheckKind::AtLeast, _) => format!(">= {}", self.expected),
            _ => format!("> {}", self.expected),
        };
        write!(f, "{verdict} {}: {:.6} (expected {target}; {})", self.name, self.measured, self.provenance)
    }
}

/// One line per record; every record name must be present in `results`.
pub fn compare_reference(
    results: &BTreeMap<String, f64>,
    records: &[ReferenceRecord],
) -> Result<Vec<CheckLine>, CliError> {
    records
        .iter()
        .map(|r| {
            let measured = *results.get(&r.name).ok_or_else(|| CliError::MissingResult(r.name.clone()))?;
            let pass = match r.kind {
                CheckKind::TwoSided => (measured - r.expected).abs() <= r.tolerance.unwrap_or(0.0),
                CheckKind::AtLeast => measured >= r.expected,
                CheckKind::GreaterThan => measured > r.expected,
            };
            Ok(CheckLine {
                name: r.name.clone(),
                measured,
                expected: r.expected,
                tolerance: r.tolerance,
                kind: r.kind,
                pass: pass && measured.is_finite(),
                provenance: r.provenance.clone(),
            })
        })
        .collect()
}
