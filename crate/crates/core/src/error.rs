use thiserror::Error;

/// Failures raised by the numerical layers and the run plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Picard iteration could not find a contracting interval.
    #[error("solver failure: {reason} (interval start t = {t_start}, last T = {t_len})")]
    Solver {
        reason: String,
        t_start: f64,
        t_len: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("fit refused: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
