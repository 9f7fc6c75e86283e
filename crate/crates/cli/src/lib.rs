//! Command implementations behind the `mmtmlp` binary.
//!
//! Each `cmd_*` function takes an already validated [`RunConfig`] and
//! returns a [`CliError`] whose [`CliError::exit_code`] the binary reports.

pub mod commands;
pub mod config;

pub use commands::*;
pub use config::{RunConfig, CONFIG_REFERENCE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0} already exists; pass --force to replace it")]
    Exists(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Diverged(String),
    #[error(transparent)]
    Core(#[from] mmtmlp::Error),
}

impl CliError {
    /// 0 success, 2 config or usage, 3 data, 4 divergence, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use mmtmlp::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Exists(_) => 2,
            CliError::Data(_) => 3,
            CliError::Diverged(_) => 4,
            CliError::Core(e) => match e {
                E::Config(_) | E::MeasurementContract(_) => 2,
                E::Data(_)
                | E::Parse { .. }
                | E::Io { .. }
                | E::InvalidPose(_)
                | E::DegeneratePose(_)
                | E::WindowBounds(_)
                | E::EmptyInput(_) => 3,
                E::Divergence { .. } => 4,
                _ => 1,
            },
        }
    }
}
