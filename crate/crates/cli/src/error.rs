use thiserror::Error;

/// Anything that stops a command from producing a verdict. All map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] markov_copula::Error),
}
