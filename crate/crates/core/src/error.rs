use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped by origin: numerical failures (factorization,
/// regularization, singular Gram matrices), data problems (degenerate or
/// non-finite columns, parse failures), and invalid configuration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty truncation interval: lower {lower} must be < upper {upper}")]
    EmptyInterval { lower: f64, upper: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("regularization failed after {attempts} jitter doublings")]
    RegularizationFailed { attempts: u32 },

    #[error("column {name} has zero variance")]
    DegenerateColumn { name: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("Gram matrix is singular ({0})")]
    SingularGram(String),

    #[error("trace contains no retained draws")]
    EmptyTrace,

    #[error("feature index {index} out of range for p = {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True when the error reflects a numerical failure rather than bad
    /// input data or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_)
                | Error::RegularizationFailed { .. }
                | Error::SingularGram(_)
                | Error::EmptyInterval { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
