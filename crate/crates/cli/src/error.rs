use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const INVALID_INPUT: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: tvspline::Error,
    },
    #[error(
        "solver stopped after {iterations} iterations with residual {residual:.3e} above the tolerance {tol:.1e}; outputs were written"
    )]
    NotConverged { iterations: usize, residual: f64, tol: f64 },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INVALID_INPUT,
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Core { source, .. } => match source {
                tvspline::Error::Io(_) => exit::IO,
                _ => exit::INVALID_INPUT,
            },
            CliError::NotConverged { .. } => exit::NOT_CONVERGED,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for std::result::Result<T, tvspline::Error> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
