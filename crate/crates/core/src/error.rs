use thiserror::Error;

/// Errors raised by spectrum construction, the product engine, criteria and sweeps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("capacity exhausted: {0}")]
    CapacityExhausted(String),

    #[error("retained spectrum mass {captured:e} never reaches target {target:e}")]
    TargetUnreachable { captured: f64, target: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
