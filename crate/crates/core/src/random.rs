//! Seeded random instances for the property suites.
//!
//! Every instance draws from its own ChaCha stream keyed by
//! `(seed, instance index)`, so results do not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fourdvar::{Approximation, BlockCovariances, FourDVarLayout};
use crate::linalg::{DenseMatrix, Lu, SpdMatrix};

pub const DEFAULT_SEED: u64 = 42;

pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::new(rows, cols, gaussian_vector(rng, rows * cols)).expect("finite samples")
}

/// `10^u` with `u` uniform on `[log10 lo, log10 hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    10f64.powf(rng.random_range(lo.log10()..=hi.log10()))
}

/// Haar-like orthogonal matrix from Gram-Schmidt (applied twice) on a
/// Gaussian matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DenseMatrix {
    loop {
        let g = gaussian_matrix(rng, n, n);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v = g.column(j);
            for _ in 0..2 {
                for q in &cols {
                    let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        if ok {
            let mut q = DenseMatrix::zeros(n, n);
            for (j, c) in cols.iter().enumerate() {
                q.set_column(j, c);
            }
            return q;
        }
    }
}

/// `Q Λ Qᵀ` with `Λ` log-uniform in `[1, kappa]`, the endpoints pinned so that
/// `κ₂ = kappa` exactly in exact arithmetic (for `n ≥ 2`).
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, kappa: f64) -> SpdMatrix {
    let q = random_orthogonal(rng, n);
    let mut lambdas: Vec<f64> = (0..n).map(|_| log_uniform(rng, 1.0, kappa)).collect();
    if n >= 2 {
        lambdas[0] = 1.0;
        lambdas[1] = kappa;
    }
    // (Λ^½ Qᵀ)ᵀ (Λ^½ Qᵀ) keeps the product exactly symmetric.
    let mut half = q.transpose();
    for (i, l) in lambdas.iter().enumerate() {
        let s = l.sqrt();
        for j in 0..n {
            half[(i, j)] *= s;
        }
    }
    SpdMatrix::new(half.gram()).expect("well-conditioned SPD sample")
}

/// One weighted least-squares instance: Gaussian `A`, `Ã = A + δ G` with
/// `δ` log-uniform in `[1e-7, 1]`, and `W` with `κ₂(W)` log-uniform in `[1, 1e4]`.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub a: DenseMatrix,
    pub a_tilde: DenseMatrix,
    pub w: SpdMatrix,
    pub kappa_w: f64,
    pub perturbation: f64,
}

pub fn random_instance(seed: u64, index: u64, max_dim: usize) -> RandomInstance {
    let mut rng = instance_rng(seed, index);
    let n = rng.random_range(2..=max_dim.max(2));
    let kappa_w = log_uniform(&mut rng, 1.0, 1e4);
    let w = random_spd(&mut rng, n, kappa_w);
    let perturbation = log_uniform(&mut rng, 1e-7, 1.0);
    loop {
        let a = gaussian_matrix(&mut rng, n, n);
        let noise = gaussian_matrix(&mut rng, n, n);
        let a_tilde = a.add(&noise.scale(perturbation)).expect("same shape");
        if Lu::new(&a).is_ok() && Lu::new(&a_tilde).is_ok() {
            return RandomInstance {
                a,
                a_tilde,
                w,
                kappa_w,
                perturbation,
            };
        }
    }
}

/// Random 4D-Var layout with `n ≤ max_n` and `N_sw ≤ max_windows`.
///
/// Model blocks are Gaussian scaled to spectral norms of order one. The
/// identity variant draws blocks near `I`; the custom variant perturbs the
/// true blocks by a tenth of a Gaussian block.
pub fn random_layout<R: Rng>(
    rng: &mut R,
    max_n: usize,
    max_windows: usize,
    kind: crate::fourdvar::VariantKind,
) -> FourDVarLayout {
    use crate::fourdvar::VariantKind;
    let n = rng.random_range(1..=max_n.max(1));
    let n_sw = rng.random_range(0..=max_windows);
    let scale = 1.0 / (n as f64).sqrt();
    let models: Vec<DenseMatrix> = (0..n_sw)
        .map(|_| {
            let s = rng.random_range(0.1..1.2) * scale;
            let g = gaussian_matrix(rng, n, n).scale(s);
            match kind {
                VariantKind::Identity => {
                    g.scale(0.3).add(&DenseMatrix::identity(n)).expect("n x n")
                }
                _ => g,
            }
        })
        .collect();
    let approximation = match kind {
        VariantKind::Zero => Approximation::Zero,
        VariantKind::Identity => Approximation::Identity,
        VariantKind::Custom => Approximation::Custom(
            models
                .iter()
                .map(|m| {
                    m.add(&gaussian_matrix(rng, n, n).scale(0.1 * scale))
                        .expect("n x n")
                })
                .collect(),
        ),
    };
    FourDVarLayout::new(n, models, approximation).expect("consistent blocks")
}

/// Block covariances with each block's condition number log-uniform in
/// `[1, kappa_max]` and an overall scale log-uniform in `[0.5, 2]`.
pub fn random_covariances<R: Rng>(
    rng: &mut R,
    layout: &FourDVarLayout,
    kappa_max: f64,
) -> BlockCovariances {
    let blocks = (0..=layout.n_sw())
        .map(|_| {
            let k = log_uniform(rng, 1.0, kappa_max);
            let s = log_uniform(rng, 0.5, 2.0);
            SpdMatrix::new(random_spd(rng, layout.n(), k).matrix().scale(s)).expect("scaled SPD")
        })
        .collect();
    BlockCovariances::new(blocks, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spd_condition;

    #[test]
    fn streams_are_reproducible_and_independent() {
        let a = random_instance(42, 7, 12);
        let b = random_instance(42, 7, 12);
        assert_eq!(a.a, b.a);
        let c = random_instance(42, 8, 12);
        assert_ne!(a.a.as_slice().first(), c.a.as_slice().first());
    }

    #[test]
    fn orthogonal_and_spd_samples() {
        let mut rng = instance_rng(1, 0);
        let q = random_orthogonal(&mut rng, 6);
        assert!(q.gram().sub(&DenseMatrix::identity(6)).unwrap().max_abs() < 1e-13);
        let w = random_spd(&mut rng, 5, 300.0);
        assert!((spd_condition(&w).unwrap() - 300.0).abs() < 1e-9 * 300.0);
    }

    #[test]
    fn instance_dimensions_in_range() {
        for i in 0..50 {
            let inst = random_instance(3, i, 5);
            let n = inst.a.rows();
            assert!((2..=5).contains(&n));
            assert_eq!(inst.w.dim(), n);
            assert!((1.0..=1e4).contains(&inst.kappa_w));
        }
    }
}
