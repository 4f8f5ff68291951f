use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or non-finite input data.
    #[error("invalid data: {0}")]
    Data(String),

    /// Invalid configuration or parameter combination.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The operation would produce no output (e.g. a segment longer than the trial).
    #[error("empty result: {0}")]
    Empty(String),

    /// Input is degenerate for the requested statistic (zero variance, constant signal, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Numerical failure (singular matrix, failed decomposition).
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A requested range lies outside the supported domain.
    #[error("out of range: {0}")]
    Range(String),

    /// Iterative solver stopped before reaching its tolerance.
    #[error("solver did not converge after {iterations} iterations (duality gap {gap:e})")]
    Convergence { iterations: usize, gap: f64 },

    /// Parse failure located in a specific file.
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    /// Error annotated with the context in which it happened.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a human-readable context label.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error once all context layers are stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
