use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?} ({context})")]
    ShapeMismatch {
        left: Vec<usize>,
        right: Vec<usize>,
        context: &'static str,
    },

    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite values produced at layer {layer}")]
    NonFinite { layer: usize },

    #[error("geometric median did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("filters above the zero threshold in layer {layer}: {offenders:?}")]
    NotZeroed { layer: usize, offenders: Vec<usize> },

    #[error("architecture error: {0}")]
    Arch(String),

    #[error("query class {label} has no relevant item in the gallery")]
    MissingClass { label: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
