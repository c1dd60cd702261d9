use thiserror::Error;

/// Errors surfaced by the numerical kernel and the solvers built on it.
///
/// Numerical preconditions are enforced eagerly: an indefinite matrix is
/// reported as such instead of being regularized behind the caller's back.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: ||A - A'||_F = {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e} below floor {floor:.3e}")]
    NotPsd { min_eig: f64, floor: f64 },

    #[error("matrix is not positive definite ({context})")]
    NotPositiveDefinite { context: &'static str },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("water-filling requires at least one positive gain")]
    AllGainsZero,

    #[error("invalid water-filling input: {0}")]
    InvalidWaterFill(String),

    #[error("every direct channel is zero; the covariance transformation is undefined")]
    DegenerateNetwork,

    #[error("power multiplier search failed: {0}")]
    MultiplierSearch(String),

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("solver failed at iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach the iteration index at which a kernel operation failed.
    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        Error::Solver {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
