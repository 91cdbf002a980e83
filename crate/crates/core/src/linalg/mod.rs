//! Dense real linear algebra: storage, factorizations, the symmetric
//! eigensolver and the norms built on it.

mod cholesky;
mod eigen;
pub mod io;
mod lu;
mod matrix;
mod triangular;

pub use cholesky::{cholesky, SpdMatrix, PIVOT_TOLERANCE, SYMMETRY_TOLERANCE};
pub use eigen::{sym_eigen, sym_eigen_decomposition, SymmetricEigen, MAX_SWEEPS};
pub use lu::Lu;
pub use matrix::{approx_eq, dot, norm2, DenseMatrix};
pub use triangular::{triangular_solve, triangular_solve_matrix};

use crate::error::{Error, Result};

/// Largest singular value, as the square root of the largest eigenvalue of `mᵀm`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    let gram = if m.rows() < m.cols() {
        m.transpose().gram()
    } else {
        m.gram()
    };
    let top = sym_eigen(&gram)?.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// `λ_max / λ_min` of an SPD matrix.
pub fn spd_condition(m: &SpdMatrix) -> Result<f64> {
    let ev = sym_eigen(m.matrix())?;
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => Ok(hi / lo),
        (Some(&lo), Some(_)) => Err(Error::NotPositiveDefinite {
            index: 0,
            pivot: lo,
        }),
        _ => Ok(1.0),
    }
}

/// `G⁻¹ n G⁻ᵀ` for `p = G Gᵀ`, symmetrized.
fn whitened(n: &SpdMatrix, p: &SpdMatrix) -> Result<DenseMatrix> {
    if n.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "generalized eigenproblem with {}x{} and {}x{} matrices",
            n.dim(),
            n.dim(),
            p.dim(),
            p.dim()
        )));
    }
    // G⁻¹ n, then G⁻¹ (G⁻¹ n)ᵀ = G⁻¹ n G⁻ᵀ since n is symmetric.
    let half = p.whiten(n.matrix())?;
    Ok(p.whiten(&half.transpose())?.symmetrized())
}

/// Ascending eigenvalues of `p⁻¹ n`, computed on the whitened matrix
/// `G⁻¹ n G⁻ᵀ` where `p = G Gᵀ`.
pub fn generalized_eigs(n: &SpdMatrix, p: &SpdMatrix) -> Result<Vec<f64>> {
    let ev = sym_eigen(&whitened(n, p)?)?;
    if let Some(&lo) = ev.first() {
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                index: 0,
                pivot: lo,
            });
        }
    }
    Ok(ev)
}

/// Generalized eigenpairs `n x = λ p x` with `xᵀ p x = 1`; eigenvectors are
/// the columns of `vectors`.
pub fn generalized_eigen_decomposition(n: &SpdMatrix, p: &SpdMatrix) -> Result<SymmetricEigen> {
    let e = sym_eigen_decomposition(&whitened(n, p)?)?;
    let vectors = triangular_solve_matrix(p.cholesky_factor(), &e.vectors, true)?;
    Ok(SymmetricEigen {
        values: e.values,
        vectors,
    })
}
