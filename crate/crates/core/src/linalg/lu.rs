use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Pivots below this fraction of the largest input entry mark the matrix singular.
pub const LU_PIVOT_TOLERANCE: f64 = 1e-12;

/// `P m = L U` with partial (row) pivoting. `L` is unit lower-triangular and
/// shares storage with `U`.
#[derive(Debug, Clone)]
pub struct Lu {
    factors: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        let n = m.require_square()?;
        let floor = LU_PIVOT_TOLERANCE * m.max_abs();
        let mut a = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pivot < floor || pivot == 0.0 {
                return Err(Error::SingularApproximation { index: k, pivot });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
            }
            let d = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / d;
                a[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        a[(i, j)] -= f * a[(k, j)];
                    }
                }
            }
        }
        Ok(Self { factors: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    fn check_len(&self, b: &[f64]) -> Result<()> {
        if b.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a {}x{} system",
                b.len(),
                self.dim(),
                self.dim()
            )))
        }
    }

    /// `m⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        let n = self.dim();
        let a = &self.factors;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| a[(i, k)] * x[k]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[(i, k)] * x[k]).sum();
            x[i] = (x[i] - s) / a[(i, i)];
        }
        Ok(x)
    }

    /// `m⁻ᵀ b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        let n = self.dim();
        let a = &self.factors;
        // mᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ y = z, then x = Pᵀ y.
        let mut z = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| a[(k, i)] * z[k]).sum();
            z[i] = (z[i] - s) / a[(i, i)];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[(k, i)] * z[k]).sum();
            z[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 3.0],
            vec![4.0, 0.5, -2.0],
        ])
        .unwrap()
    }

    #[test]
    fn solve_and_transpose_solve() {
        let m = sample();
        let lu = Lu::new(&m).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = lu.solve(&b).unwrap();
        for (u, v) in m.matvec(&x).unwrap().iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
        let y = lu.solve_transpose(&b).unwrap();
        for (u, v) in m.matvec_transpose(&y).unwrap().iter().zip(&b) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_rejected() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            Lu::new(&m),
            Err(Error::SingularApproximation { index: 1, .. })
        ));
        assert!(Lu::new(&DenseMatrix::zeros(2, 2)).is_err());
    }
}
