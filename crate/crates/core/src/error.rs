use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Work or memory estimate above the configured cap.
    #[error("capacity exceeded: {what} needs {needed:.3e}, cap is {cap:.3e}")]
    Capacity { what: String, needed: f64, cap: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("no convergence after {sweeps} sweeps, residual {residual:.3e}")]
    Convergence { sweeps: usize, residual: f64 },

    /// Imaginary leak or non-finite value in a quantity that must be real.
    #[error("numerical health check failed: {0}")]
    NumericalHealth(String),

    #[error("unsupported ensemble: {0}")]
    UnsupportedEnsemble(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn capacity(what: impl Into<String>, needed: f64, cap: f64) -> Self {
        Error::Capacity { what: what.into(), needed, cap }
    }
}
