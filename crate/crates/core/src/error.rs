use std::path::PathBuf;

/// Broad category of an [`Error`], used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Numerical => 2,
            ErrorKind::Io => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {field} at index {index}")]
    NonFinite { field: String, index: usize },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("power-set oracle supports at most {max} classes, got {found}")]
    TooManyClasses { found: usize, max: usize },

    #[error("enumeration budget exceeded: {0}")]
    EnumerationBudget(String),

    #[error(
        "max |w| = {max_abs} exceeds the exponentiation guard {limit}; use the sign-only singleton test instead"
    )]
    OverflowGuard { max_abs: f64, limit: f64 },

    #[error("total conflict between mass functions (kappa = {kappa})")]
    TotalConflict { kappa: f64 },

    #[error("mass function does not normalize: total = {total}")]
    NotNormalized { total: f64 },

    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFinite { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidParams(_)
            | Error::Schema(_)
            | Error::Parse { .. }
            | Error::TooManyClasses { .. }
            | Error::EnumerationBudget(_) => ErrorKind::Validation,
            Error::OverflowGuard { .. }
            | Error::TotalConflict { .. }
            | Error::NotNormalized { .. }
            | Error::EmptySupport(_) => ErrorKind::Numerical,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn dims(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected,
            found,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(field: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            field: field.to_string(),
            index,
        }),
        None => Ok(()),
    }
}
