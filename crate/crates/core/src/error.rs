use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Discarded kernel mass (or per-step leak) above the allowed tolerance.
    #[error("truncation error: bound {bound:.3e} exceeds tolerance {tolerance:.3e}")]
    Truncation { bound: f64, tolerance: f64 },

    #[error("numeric failure in {context}: residual {residual:.3e}")]
    NumericFailure { context: String, residual: f64 },

    #[error("resource limit: {what} needs {estimate:.3e}, cap is {cap:.3e}")]
    ResourceLimit { what: String, estimate: f64, cap: f64 },

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
