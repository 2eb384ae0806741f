use thiserror::Error;

/// Errors raised by the library. Each variant maps onto a CLI exit code
/// through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate bandwidth: floor(2NW) = 0 for N = {n}, W = {w}")]
    DegenerateBandwidth { n: usize, w: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// 2 for validation problems, 3 for numerical problems, 1 for the rest.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DegenerateBandwidth { .. }
            | Error::Precondition(_)
            | Error::GridMismatch(_)
            | Error::Json(_) => 2,
            Error::Numerical(_) | Error::Consistency(_) => 3,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
