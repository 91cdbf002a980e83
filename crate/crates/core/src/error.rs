use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("triangular matrix is singular (diagonal {value:.3e} at index {index})")]
    SingularTriangular { index: usize, value: f64 },

    #[error("approximate matrix is singular (pivot {pivot:.3e} at column {index})")]
    SingularApproximation { index: usize, pivot: f64 },

    #[error("error norm {e_norm:.6e} is not admissible for kappa {kappa:.6e} (threshold {threshold:.6e})")]
    NotAdmissible {
        e_norm: f64,
        kappa: f64,
        threshold: f64,
    },

    #[error("operation not supported for the custom approximation variant")]
    UnsupportedVariant,

    #[error("CG breakdown at iteration {iteration}: curvature {curvature:.3e}")]
    BreakdownDetected { iteration: usize, curvature: f64 },

    #[error("operator is not symmetric (mismatch {mismatch:.3e})")]
    NonSymmetricOperator { mismatch: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}
