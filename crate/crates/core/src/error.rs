use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector has no Rayleigh quotient")]
    ZeroVector,

    #[error("all columns were dropped during S-orthonormalization")]
    EmptyBasis,

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("Jacobi iteration did not converge within {sweeps} sweeps (off-diagonal mass {off:e})")]
    SweepLimit { sweeps: usize, off: f64 },

    #[error("dense size {n} exceeds the configured limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("{what} did not converge after {iterations} iterations (relative residual {achieved:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        achieved: f64,
    },

    #[error("zero pivot at row {row}: shift {sigma} is an eigenvalue to machine precision")]
    SingularShift { row: usize, sigma: f64 },

    #[error("bandwidth {bandwidth} exceeds cap {cap}; use the InnerKrylov preconditioner")]
    BandwidthCap { bandwidth: usize, cap: usize },

    #[error("trial subspace collapsed: need {needed} directions, only {available} available")]
    SubspaceCollapse { needed: usize, available: usize },

    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("matrix market, line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
