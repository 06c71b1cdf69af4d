use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible lengths or shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric input was NaN or infinite where finite values are required.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// An exhaustive computation was refused because it exceeds the size caps.
    #[error("instance too large: {0}")]
    TooLarge(String),

    /// A bound evaluation has no feasible terms and therefore no finite value.
    #[error("degenerate evaluation: {0}")]
    Degenerate(String),

    /// File I/O failed; the path is included for context.
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Checks that every value in `v` is finite.
pub(crate) fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
