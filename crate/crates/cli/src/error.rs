use std::path::PathBuf;

use esdr_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("{0}")]
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::FileNotFound(_) => "file_not_found",
            CliError::Core(e) if is_config_error(e) => "invalid_input",
            CliError::Core(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::FileNotFound(_) => EXIT_CONFIG,
            CliError::Core(e) if is_config_error(e) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }

    /// `error kind=<kind> code=<exit>: <message>` on one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error kind={} code={}: {msg}", self.kind(), self.exit_code())
    }
}

fn is_config_error(e: &CoreError) -> bool {
    match e {
        CoreError::InvalidParameter { .. }
        | CoreError::DegenerateBasis
        | CoreError::TruncationTooSmall { .. }
        | CoreError::ParallelFieldRequired(_)
        | CoreError::EmptySpectrum => true,
        CoreError::AtGridPoint { source, .. } => is_config_error(source),
        _ => false,
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
