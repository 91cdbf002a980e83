#![allow(dead_code, clippy::needless_range_loop)]

use wlsq_core::linalg::DenseMatrix;

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(m: &DenseMatrix) -> DenseMatrix {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
            .unwrap();
        a.swap(k, p);
        inv.swap(k, p);
        let d = a[k][k];
        assert!(d != 0.0, "singular matrix in test oracle");
        for j in 0..n {
            a[k][j] /= d;
            inv[k][j] /= d;
        }
        for i in 0..n {
            if i != k {
                let f = a[i][k];
                for j in 0..n {
                    a[i][j] -= f * a[k][j];
                    inv[i][j] -= f * inv[k][j];
                }
            }
        }
    }
    DenseMatrix::from_rows(&inv).unwrap()
}

/// Number of negative pivots of symmetric `m` by unpivoted LDLᵀ, which by
/// Sylvester's law of inertia counts its negative eigenvalues.
pub fn negative_pivots(m: &DenseMatrix) -> usize {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut count = 0;
    for k in 0..n {
        let d = a[k][k];
        if d < 0.0 {
            count += 1;
        }
        let d = if d == 0.0 { -1e-300 } else { d };
        for i in k + 1..n {
            let f = a[i][k] / d;
            for j in k + 1..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    count
}

/// Ascending eigenvalues of the pencil `n − λ p` (`p` SPD) by bisection on
/// the inertia of `n − λ p`, each to absolute width `tol`.
pub fn pencil_eigs_by_bisection(
    n: &DenseMatrix,
    p: &DenseMatrix,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Vec<f64> {
    let dim = n.rows();
    let below = |lambda: f64| negative_pivots(&n.sub(&p.scale(lambda)).unwrap());
    (0..dim)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if below(mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

pub fn sym_eigs_by_bisection(m: &DenseMatrix, tol: f64) -> Vec<f64> {
    let r = m.frobenius_norm() + 1.0;
    pencil_eigs_by_bisection(m, &DenseMatrix::identity(m.rows()), -r, r, tol)
}

/// `max |x_i − y_i| ≤ tol` over two equal-length matrices.
pub fn max_gap(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.sub(y).unwrap().max_abs()
}
