use thiserror::Error;

use crate::kernel::TailBound;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Inputs outside the domain where the quantity is defined (s <= d, beta <= 0, ...).
    #[error("domain violation: {0}")]
    Domain(String),

    /// A sum or quadrature could not reach the requested tolerance; `best` is
    /// the tightest bracket that was obtained.
    #[error("tolerance {requested:e} not met for {what}: best bracket [{}, {}]", best.value, best.upper())]
    ToleranceNotMet {
        what: String,
        requested: f64,
        best: TailBound,
    },

    #[error("enumeration of 2^{sites} states exceeds the cap of 2^{cap}")]
    EnumerationCap { sites: usize, cap: usize },

    #[error("region is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("local field cache is stale: max deviation {deviation:e}")]
    StaleCache { deviation: f64 },

    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::sync::Arc<std::io::Error>),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(std::sync::Arc::new(e))
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
