//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Each sweep visits every off-diagonal pair `(p, q)` once and applies the
//! rotation that annihilates `a[p][q]`. Iteration stops when the Frobenius
//! norm of the off-diagonal part falls below `OFF_DIAGONAL_TOLERANCE` times
//! the Frobenius norm of the input, or fails after `MAX_SWEEPS` sweeps.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.values.len();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                    .sum();
            }
        }
        out
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigen(m: &DenseMatrix) -> Result<Vec<f64>> {
    jacobi(m, false).map(|e| e.values)
}

/// Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix.
pub fn sym_eigen_decomposition(m: &DenseMatrix) -> Result<SymmetricEigen> {
    jacobi(m, true)
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..i {
            s += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

fn jacobi(m: &DenseMatrix, want_vectors: bool) -> Result<SymmetricEigen> {
    let n = m.require_square()?;
    let mut a = m.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let threshold = OFF_DIAGONAL_TOLERANCE * m.frobenius_norm();

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
                if want_vectors {
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = vrp - s * (vrq + tau * vrp);
                        v[(r, q)] = vrq + s * (vrp - tau * vrq);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    if want_vectors {
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &v.column(src));
        }
    }
    Ok(SymmetricEigen { values, vectors })
}
