use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::Kind;

/// One validation finding, addressed by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("invalid config:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<Diagnostic>),
    #[error("subcommand '{requested}' does not match config kind '{declared}'")]
    KindMismatch { requested: Kind, declared: Kind },
    #[error("no output directory: pass --out or set output_dir")]
    NoOutputDir,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] thicklab::Error),
    #[error("synthesis {0}")]
    Synthesis(Box<thicklab::control::SynthesisError>),
    #[error("thread pool: {0}")]
    Threads(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for config problems, 3 for run failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Validation(_) | CliError::KindMismatch { .. } | CliError::NoOutputDir => 2,
            _ => 3,
        }
    }
}
