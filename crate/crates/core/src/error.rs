use thiserror::Error;

/// All failure modes surfaced by the library.
///
/// The split matters to callers: parameter errors are caller bugs caught at
/// API boundaries, parse/validation/domain errors come from bad inputs, and
/// internal-consistency violations mean state that must never occur by
/// construction was observed anyway.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
