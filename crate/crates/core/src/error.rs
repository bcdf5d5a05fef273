use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("measure is not normalized (total weight {total})")]
    UnnormalizedMeasure { total: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("kernel value {value} outside admissible band [{lo}, {hi}]")]
    KernelOutOfBand { value: f64, lo: f64, hi: f64 },

    #[error("simulation budget exceeded: expected {expected:.3e} proposals, cap {cap:.3e}")]
    BudgetExceeded { expected: f64, cap: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),

    #[error("centering condition violated: residual {residual:.3e} > tol {tol:.3e}")]
    CenteringViolated { residual: f64, tol: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
