use thiserror::Error;

/// Errors produced by validation, sampling and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mass constraint violated: L^-alpha (A + L^-gamma A~) = {value} > 1/2")]
    MassConstraintViolated { value: f64 },

    #[error("forbidden index: {0}")]
    ForbiddenIndex(String),

    #[error("parameter out of range: {0}")]
    RangeError(String),

    #[error("moment undefined: {0}")]
    MomentUndefined(String),

    #[error("root finding failed: {0}")]
    RootFindFailure(String),

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("coefficient needs a nonempty measure")]
    EmptyMeasure,

    #[error("unsupported regime: {0}")]
    RegimeError(String),

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("(alpha = {alpha}, gamma = {gamma}) is not covered by the rate table")]
    UncoveredCase { alpha: f64, gamma: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
