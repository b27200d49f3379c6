use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI run. Each variant maps to its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Model(#[source] clockwork::Error),
    #[error("{0}")]
    Degenerate(#[source] clockwork::Error),
    #[error("{0}")]
    Solver(#[source] clockwork::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Model(_) => 5,
            CliError::Degenerate(_) => 6,
            CliError::Solver(_) => 7,
        }
    }

    /// Stable, machine-readable category printed with the message.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Model(_) => "model",
            CliError::Degenerate(_) => "non-unique-steady-state",
            CliError::Solver(_) => "solver",
        }
    }
}

impl From<clockwork::Error> for CliError {
    fn from(e: clockwork::Error) -> Self {
        use clockwork::Error as E;
        match e {
            E::Config(msg) => CliError::Config(msg),
            E::NonUniqueSteadyState { .. } => CliError::Degenerate(e),
            E::SolverFailure(_) | E::StepRejected { .. } => CliError::Solver(e),
            _ => CliError::Model(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
