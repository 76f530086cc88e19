use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pulse area {area} differs from pi by {deviation:.3e}")]
    PulseArea { area: f64, deviation: f64 },

    #[error("eigenspace resolution failed: {0}")]
    Degeneracy(String),

    #[error("structural check failed: {0}")]
    Verification(String),

    #[error("integrator did not converge: {0}")]
    Convergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
