use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Block unit-lower-bidiagonal matrix: `I_n` on the diagonal and `−M_j` in
/// block `(j, j−1)` for `j = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBidiagonal {
    n: usize,
    sub: Vec<DenseMatrix>,
}

impl BlockBidiagonal {
    /// `sub[j−1]` holds `M_j`; every block must be `n x n`.
    pub fn new(n: usize, sub: Vec<DenseMatrix>) -> Result<Self> {
        if let Some(j) = sub.iter().position(|m| m.rows() != n || m.cols() != n) {
            return Err(Error::DimensionMismatch(format!(
                "block {} is {}x{}, expected {n}x{n}",
                j + 1,
                sub[j].rows(),
                sub[j].cols()
            )));
        }
        Ok(Self { n, sub })
    }

    /// Recovers the blocks of a dense block unit-lower-bidiagonal matrix.
    pub fn from_dense(l: &DenseMatrix, n: usize) -> Result<Self> {
        let dim = l.require_square()?;
        if n == 0 || dim % n != 0 {
            return Err(Error::DimensionMismatch(format!(
                "a {dim}x{dim} matrix does not split into {n}x{n} blocks"
            )));
        }
        let blocks = dim / n;
        for i in 0..dim {
            for j in 0..dim {
                let (bi, bj) = (i / n, j / n);
                let on_band = bi == bj || bi == bj + 1;
                let expected_unit = i == j;
                let v = l[(i, j)];
                if (bi == bj && v != if expected_unit { 1.0 } else { 0.0 })
                    || (!on_band && v != 0.0)
                {
                    return Err(Error::DimensionMismatch(format!(
                        "entry ({i}, {j}) = {v} breaks the block unit-lower-bidiagonal structure"
                    )));
                }
            }
        }
        let sub = (1..blocks)
            .map(|b| l.block(b * n, (b - 1) * n, n, n).scale(-1.0))
            .collect();
        Ok(Self { n, sub })
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.sub.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.n * self.num_blocks()
    }

    /// `M_j` for `j = 1..=N`.
    pub fn sub_block(&self, j: usize) -> &DenseMatrix {
        &self.sub[j - 1]
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "vector of length {} for a block operator of dimension {}",
                x.len(),
                self.dim()
            )))
        }
    }

    fn seg(&self, j: usize) -> std::ops::Range<usize> {
        j * self.n..(j + 1) * self.n
    }

    /// `L x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut y = x.to_vec();
        for (j, m) in self.sub.iter().enumerate() {
            let mx = m.matvec(&x[self.seg(j)])?;
            for (yi, v) in y[self.seg(j + 1)].iter_mut().zip(mx) {
                *yi -= v;
            }
        }
        Ok(y)
    }

    /// `Lᵀ x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut y = x.to_vec();
        for (j, m) in self.sub.iter().enumerate() {
            let mtx = m.matvec_transpose(&x[self.seg(j + 1)])?;
            for (yi, v) in y[self.seg(j)].iter_mut().zip(mtx) {
                *yi -= v;
            }
        }
        Ok(y)
    }

    /// `L⁻¹ r` by block forward substitution (`y₀ = r₀`, `y_j = r_j + M_j y_{j−1}`),
    /// or `L⁻ᵀ r` by block back substitution when `transposed`.
    pub fn solve(&self, rhs: &[f64], transposed: bool) -> Result<Vec<f64>> {
        self.check(rhs)?;
        let mut y = rhs.to_vec();
        if transposed {
            for j in (0..self.sub.len()).rev() {
                let next = self.sub[j].matvec_transpose(&y[self.seg(j + 1)])?;
                for (yi, v) in y[self.seg(j)].iter_mut().zip(next) {
                    *yi += v;
                }
            }
        } else {
            for j in 0..self.sub.len() {
                let prev = self.sub[j].matvec(&y[self.seg(j)])?;
                for (yi, v) in y[self.seg(j + 1)].iter_mut().zip(prev) {
                    *yi += v;
                }
            }
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut l = DenseMatrix::identity(self.dim());
        for (j, m) in self.sub.iter().enumerate() {
            l.set_block((j + 1) * self.n, j * self.n, &m.scale(-1.0));
        }
        l
    }
}

/// `L⁻¹ rhs` (or `L⁻ᵀ rhs`) for a block unit-lower-bidiagonal `L`.
pub fn apply_linv(l: &BlockBidiagonal, rhs: &[f64], transposed: bool) -> Result<Vec<f64>> {
    l.solve(rhs, transposed)
}
