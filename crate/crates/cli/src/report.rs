// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::ModelError;

/// Exit code 2: the input could not be used. Exit code 1: the computation
/// ran into a numerical condition it reports instead of a result.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<dfm_core::Error> for CliError {
    fn from(e: dfm_core::Error) -> Self {
        use dfm_core::Error as E;
        match e {
            E::IntegrationFailure { .. }
            | E::AmbiguousClustering { .. }
            | E::BlockCrossing { .. }
            | E::StepTooCoarse { .. }
            | E::NoConvergence(_) => CliError::Compute(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Machine-readable record of one invocation. Everything except
/// `timing_ms` is a function of the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub config_digest: String,
    pub results: Value,
    pub checks: Vec<Check>,
    pub timing_ms: f64,
}

/// Result of a command: the report, its human rendering, an optional CSV
/// table and the exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub text: String,
    pub csv: Option<String>,
    pub exit_code: u8,
}

/// Hex SHA-256 of the compact JSON of `config` (object keys sorted).
pub fn digest(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values serialize");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
