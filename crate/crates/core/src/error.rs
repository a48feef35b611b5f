use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation has no implementation for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Two inversion orders disagree beyond the accepted tolerance.
    #[error("inversion disagreement at t={t}: {coarse} vs {fine}")]
    InversionDisagreement { t: f64, coarse: f64, fine: f64 },

    #[error("unknown catalog key `{0}`")]
    UnknownKey(String),
}
