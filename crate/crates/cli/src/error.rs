use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed document; the message carries line/column and key.
    #[error("parse error: {0}")]
    Parse(String),

    /// Well-formed but violates the named invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] kgfrw::Error),

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const BLOW_UP: u8 = 2;
    pub const INADMISSIBLE: u8 = 3;
}
