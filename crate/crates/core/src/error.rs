use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants are grouped by how a caller is expected to react: bad input
/// ([`Error::Schema`]), a violated mathematical precondition
/// ([`Error::Domain`], [`Error::Precondition`], [`Error::Argument`]), or a
/// discretization that is too coarse to decide ([`Error::Resolution`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate basis: smallest singular value {smallest:e} < 1e-10 * largest {largest:e}")]
    DegenerateBasis { smallest: f64, largest: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition of {theorem} violated: {detail}")]
    Precondition { theorem: String, detail: String },

    #[error("resolution failure: {detail} (hint: {hint})")]
    Resolution { detail: String, hint: String },

    #[error("empty fiber: no atom at {0:?}")]
    EmptyFiber(Vec<f64>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error at `{path}`: {detail}")]
    Schema { path: String, detail: String },

    #[error("malformed varifold file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn precondition(theorem: &str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            theorem: theorem.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn resolution(detail: impl Into<String>, hint: impl Into<String>) -> Self {
        Error::Resolution {
            detail: detail.into(),
            hint: hint.into(),
        }
    }

    /// Process exit status associated with this error by the command-line
    /// driver: 2 for schema problems, 3 for numeric preconditions, 4 for
    /// resolution failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } | Error::Format(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::Domain(_)
            | Error::DegenerateBasis { .. }
            | Error::Argument(_)
            | Error::Precondition { .. }
            | Error::EmptyFiber(_)
            | Error::Unsupported(_) => 3,
            Error::Resolution { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
