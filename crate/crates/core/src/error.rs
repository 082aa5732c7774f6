use thiserror::Error;

/// Errors raised by the core computations.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request is valid but deliberately refused (too costly, capped).
    #[error("refused: {0}")]
    Refused(String),

    /// An enclosure could not be narrowed below the requested width.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    /// An enclosure straddles an integer even at the finest allowed width.
    #[error("undecidable rounding: {0}")]
    UndecidableRounding(String),

    /// A cached table failed validation.
    #[error("cache integrity failure at row {row}: {reason}")]
    CacheIntegrity { row: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
