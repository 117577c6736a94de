//! Model-file driver: analysis orchestration and report emission for the `gradmech` binary.

pub mod analyze;
pub mod commands;
pub mod json;
pub mod model;

use thiserror::Error;

/// Errors carry their exit code: 1 for bad input, 2 for failed analyses and preconditions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("analysis error: {0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }

    pub(crate) fn analysis(e: impl std::fmt::Display) -> Self {
        CliError::Analysis(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

/// Flags shared by every command.
#[derive(Clone, Debug)]
pub struct Options {
    pub format: Format,
    pub tolerance: f64,
    pub jobs: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { format: Format::Json, tolerance: 1e-8, jobs: 1 }
    }
}
