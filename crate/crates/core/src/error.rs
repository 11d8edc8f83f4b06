use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller supplied an invalid argument (count, grid shape, option).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Near-zero denominator in a resonance evaluator.
    #[error("singular resonance denominator (|D| = {magnitude:e}) at detuning {detuning}")]
    Singular { magnitude: f64, detuning: f64 },

    /// Physics-consistency violation (e.g. energy mismatch of a resonance triple).
    #[error("physics consistency: {0}")]
    Consistency(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
