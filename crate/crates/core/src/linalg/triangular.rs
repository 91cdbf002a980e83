use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const SINGULAR_DIAGONAL: f64 = 1e-300;

/// Solves `l x = b`, or `lᵀ x = b` when `transposed`, for lower-triangular `l`.
///
/// Entries above the diagonal of `l` are never read.
pub fn triangular_solve(l: &DenseMatrix, b: &[f64], transposed: bool) -> Result<Vec<f64>> {
    let n = l.require_square()?;
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for a {n}x{n} triangular system",
            b.len()
        )));
    }
    for i in 0..n {
        let d = l[(i, i)];
        if d.abs() < SINGULAR_DIAGONAL {
            return Err(Error::SingularTriangular { index: i, value: d });
        }
    }
    let mut x = b.to_vec();
    if transposed {
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
    } else {
        for i in 0..n {
            let row = l.row(i);
            let s = x[i]
                - row[..i]
                    .iter()
                    .zip(&x[..i])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            x[i] = s / row[i];
        }
    }
    Ok(x)
}

/// Applies [`triangular_solve`] to every column of `b`.
pub fn triangular_solve_matrix(
    l: &DenseMatrix,
    b: &DenseMatrix,
    transposed: bool,
) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let x = triangular_solve(l, &b.column(j), transposed)?;
        out.set_column(j, &x);
    }
    Ok(out)
}
