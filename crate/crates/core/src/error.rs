use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid central charge: {0}")]
    InvalidCharge(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("factor {factor} has combined coefficient of negative sign; mixed-sign charges are oracle-only")]
    MixedSigns { factor: usize },

    #[error("Weyl group closure exceeds {0} elements")]
    WeylCapExceeded(usize),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Serde error carrying the bare message, so the outer parse error does not
/// repeat its prefix.
pub(crate) fn de_error<E: serde::de::Error>(e: Error) -> E {
    match e {
        Error::Parse(m) => E::custom(m),
        other => E::custom(other),
    }
}
