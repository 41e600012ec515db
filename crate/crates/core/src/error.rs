use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the function being evaluated.
    #[error("domain error in {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    /// A user-facing parameter violates its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("solver did not converge after {iterations} iterations ({detail})")]
    NonConvergence { iterations: usize, detail: String },

    #[error("step size underflow: halving dt down to {dt:e} did not meet tolerance {tolerance:e}")]
    StepUnderflow { dt: f64, tolerance: f64 },

    /// The trajectory ends while the outbreak is still active.
    #[error("outbreak not finished at t={t}: I={infected} >= {threshold}")]
    NotConverged { t: f64, infected: f64, threshold: f64 },

    #[error("trajectory has no samples")]
    EmptyTrajectory,

    #[error("sweep cell (a={a}, R0={r0}) failed: {source}")]
    SweepCell {
        a: f64,
        r0: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("disease `{name}`: {source}")]
    DiseaseRow {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("catalog parse error at line {line}, field `{field}`: {message}")]
    CatalogParse { line: u64, field: String, message: String },

    #[error("catalog validation error at line {line}: {message}")]
    CatalogValidation { line: u64, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
