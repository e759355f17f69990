use thiserror::Error;

/// Errors raised by the transport calculations.
///
/// Numeric payloads are widened to `f64` so the type does not depend on the
/// scalar parameter.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("excitation level {0} is not supported (only 0, 1 and 2)")]
    UnsupportedLevel(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("defective eigenproblem at level {level}: eigenvalue {re:+.6e}{im:+.6e}i has a self-orthogonal eigenvector")]
    Defective { level: usize, re: f64, im: f64 },

    #[error("dense eigensolve failed: {0}")]
    EigenSolve(String),

    #[error("transmission {t:.3e} at omega_L = {omega_l} is below the floor; sample an adjacent frequency")]
    TransmissionFloor { omega_l: f64, t: f64 },

    #[error("oracle Hilbert space too large: {0}")]
    OracleTooLarge(String),

    #[error("drive strength {omega} exceeds the weak-drive bound {bound}")]
    WeakDrive { omega: f64, bound: f64 },

    #[error("oracle not converged: {0}")]
    RefinementNeeded(String),

    #[error("fast path disagrees with full diagonalization: {0}")]
    FastPathMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
