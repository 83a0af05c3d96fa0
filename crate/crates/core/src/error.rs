use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Proven non-convergence of phase 2 is not an error; it is reported through
/// [`crate::phase2::Phase2Outcome`].
#[derive(Debug, Error)]
pub enum EwmError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerics error: {0}")]
    Numerics(String),

    /// A root of some polynomial sits too close to the unit circle to decide
    /// whether the base is expanding.
    #[error("inconclusive numerics: {0}")]
    InconclusiveNumerics(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ineligible numeration system: {0}")]
    Ineligible(String),

    #[error("internal error: {0}")]
    Internal(String),

    /// Phase 1 overran its iteration budget. Convergence is proven for
    /// expanding bases, so this indicates a bug.
    #[error("aborted: {0}")]
    Abort(String),

    #[error("resource limit reached: {0}")]
    ResourceAbort(String),

    #[error("weight table has no entry for window {window}")]
    TableIncomplete { window: String },

    #[error("weight table produced digit {digit} outside the alphabet at window {window}")]
    InvalidTable { window: String, digit: String },

    #[error("import error at row {row}: {message}")]
    Import { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EwmError> = std::result::Result<T, E>;
