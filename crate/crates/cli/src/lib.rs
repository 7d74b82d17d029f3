//! Experiment runner for the STAR-RIS full-duplex NOMA model: parses
//! experiment files, sweeps one parameter over a grid and writes one CSV row
//! per `(grid point, case, design, estimator)`.

// negated comparisons deliberately send NaN down the rejection branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod presets;
pub mod run;
pub mod spec;

pub use run::{run_experiment, write_outputs, OutputPaths, Peak, Row, Table};
pub use spec::{Case, Design, EstimatorSet, ExperimentSpec, Params, PowerScheme, SweepVar};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The experiment is malformed; every offending field is listed.
    #[error("invalid experiment:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{0}")]
    Io(String),

    /// A grid point failed numerically or was infeasible.
    #[error("{context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: starfd::Error,
    },
}

impl CliError {
    /// 1 for bad input (including unusable paths), 2 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numeric { .. } => 2,
        }
    }
}

/// Reads an experiment from a path, or from a shipped preset written as
/// `preset:<name>`.
pub fn load(source: &str) -> Result<ExperimentSpec, CliError> {
    let text = match source.strip_prefix("preset:") {
        Some(name) => presets::get(name)
            .ok_or_else(|| CliError::Validation(vec![format!("unknown preset '{name}' (see `presets list`)")]))?
            .to_string(),
        None => std::fs::read_to_string(source).map_err(|e| CliError::Io(format!("cannot read {source}: {e}")))?,
    };
    ExperimentSpec::parse(&text)
}
