use crate::error::{Error, Result};
use crate::linalg::triangular::{triangular_solve, triangular_solve_matrix};
use crate::linalg::DenseMatrix;

/// Pivots at or below this fraction of the largest diagonal entry are rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Input asymmetry accepted by [`SpdMatrix::new`], relative in Frobenius norm.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Lower-triangular `G` with `G Gᵀ = m`.
///
/// Only the lower triangle of `m` is read.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.require_square()?;
    let max_diag = m.diagonal().iter().fold(0.0f64, |a, &d| a.max(d));
    let floor = PIVOT_TOLERANCE * max_diag;
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let gj = g.row(j);
        let pivot = m[(j, j)] - gj[..j].iter().map(|x| x * x).sum::<f64>();
        if !(pivot > floor) || pivot <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        g[(j, j)] = d;
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| g[(i, k)] * g[(j, k)]).sum();
            g[(i, j)] = (m[(i, j)] - s) / d;
        }
    }
    Ok(g)
}

/// Symmetric positive-definite matrix with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    base: DenseMatrix,
    chol: DenseMatrix,
}

impl SpdMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2` after checking that its asymmetry is
    /// within [`SYMMETRY_TOLERANCE`], then factors it.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        m.require_square()?;
        let asymmetry = m.relative_asymmetry();
        if asymmetry > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let base = m.symmetrized();
        let chol = cholesky(&base)?;
        Ok(Self { base, chol })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            base: DenseMatrix::identity(n),
            chol: DenseMatrix::identity(n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DenseMatrix::from_diagonal(diag)?)
    }

    pub fn dim(&self) -> usize {
        self.base.rows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.base
    }

    pub fn cholesky_factor(&self) -> &DenseMatrix {
        &self.chol
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.base
    }

    /// `m⁻¹ b` through two triangular solves.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let y = triangular_solve(&self.chol, b, false)?;
        triangular_solve(&self.chol, &y, true)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.base.matvec(x)
    }

    /// `G⁻¹ b` for the Cholesky factor `G`, column by column.
    pub fn whiten(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        triangular_solve_matrix(&self.chol, b, false)
    }

    /// Product of eigenvalues, from the squared Cholesky diagonal.
    pub fn determinant(&self) -> f64 {
        self.chol.diagonal().iter().map(|d| d * d).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_frob(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn identity_factor() {
        assert_eq!(
            cholesky(&DenseMatrix::identity(3)).unwrap(),
            DenseMatrix::identity(3)
        );
    }

    #[test]
    fn two_by_two_by_hand() {
        let m = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let g = cholesky(&m).unwrap();
        let expected = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(g, expected);
    }

    #[test]
    fn indefinite_rejected() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&m),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn near_singular_pivot_rejected() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-13]]).unwrap();
        assert!(cholesky(&m).is_err());
    }

    #[test]
    fn spd_constructor_checks_symmetry() {
        let m = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.1, 5.0]]).unwrap();
        assert!(matches!(SpdMatrix::new(m), Err(Error::NotSymmetric { .. })));
        let m = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0 + 1e-15, 5.0]]).unwrap();
        let s = SpdMatrix::new(m).unwrap();
        assert_eq!(s.matrix()[(0, 1)], s.matrix()[(1, 0)]);
    }

    #[test]
    fn factor_reproduces_base_and_solves() {
        let m = DenseMatrix::from_rows(&[
            vec![6.0, 1.0, -2.0],
            vec![1.0, 5.0, 0.5],
            vec![-2.0, 0.5, 4.0],
        ])
        .unwrap();
        let s = SpdMatrix::new(m.clone()).unwrap();
        let g = s.cholesky_factor();
        assert!(rel_frob(&g.matmul(&g.transpose()).unwrap(), &m) < 1e-10);
        let x = s.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back = m.matvec(&x).unwrap();
        for (u, v) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((u - v).abs() < 1e-12);
        }
        let det = 6.0 * (20.0 - 0.25) - 1.0 * (4.0 + 1.0) + (-2.0) * (0.5 + 10.0);
        assert!((s.determinant() - det).abs() < 1e-10 * det);
    }
}
