//! Command-line orchestration for `lrising`: config files, experiment
//! runners, atomic artifact output and the acceptance suites.

pub mod artifact;
pub mod config;
pub mod run;
pub mod verify;

use thiserror::Error;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;
pub const EXIT_ENUMERATION: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] lrising::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lrising::Error as E;
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Core(E::Domain(_) | E::Disconnected { .. } | E::DegenerateFit(_)) => EXIT_DOMAIN,
            CliError::Core(E::ToleranceNotMet { .. }) => EXIT_TOLERANCE,
            CliError::Core(E::EnumerationCap { .. }) => EXIT_ENUMERATION,
            _ => EXIT_OTHER,
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> CliError {
    CliError::Core(lrising::Error::Domain(msg.into()))
}
