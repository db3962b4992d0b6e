use std::path::PathBuf;

use lexcvar::domains::DomainError;
use lexcvar::exec::ExecError;
use lexcvar::solver::SolveError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration; nothing was run.
    #[error("{0}")]
    Usage(String),
    #[error("domain: {0}")]
    Domain(#[from] DomainError),
    #[error("{stage}: {source}")]
    Solve {
        stage: &'static str,
        #[source]
        source: SolveError,
    },
    #[error("evaluation: {0}")]
    Exec(#[from] ExecError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Document { path: PathBuf, message: String },
    #[error(
        "stale solutions in {dir}: config hash {found} does not match {expected}; re-run solve"
    )]
    Stale {
        dir: PathBuf,
        found: String,
        expected: String,
    },
    #[error("{0}")]
    Compare(String),
    #[error("model is invalid:\n{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    pub fn solve(stage: &'static str) -> impl FnOnce(SolveError) -> Self {
        move |source| CliError::Solve { stage, source }
    }
}
