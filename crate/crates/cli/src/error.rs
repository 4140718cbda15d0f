use nmts::impls::EnumError;
use nmts::{BisimError, ParseError, RefineError};
use thiserror::Error;

/// Everything that ends a command with exit status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("{source_name}: {error}")]
    Parse { source_name: String, error: ParseError },
    #[error("`{0}` is neither a file nor a bundled model")]
    MissingFile(String),
    #[error("`{0}` has optional transitions; an LTS is required")]
    NotLts(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error(transparent)]
    Bisim(#[from] BisimError),
}
