//! Preconditioned conjugate gradients on symmetric positive-definite
//! operators, and the operators for the two least-squares settings.
//!
//! Preconditioners are applied through their factors (LU of `Ã`, Cholesky of
//! `W` or `D`, block substitution with `L̃`); no inverse is ever formed.

use crate::error::{Error, Result};
use crate::fourdvar::{BlockBidiagonal, BlockCovariances, FourDVarLayout};
use crate::linalg::{dot, norm2, DenseMatrix, Lu, SpdMatrix};
use crate::random::{gaussian_vector, instance_rng};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// `pᵀ A p` at or below this value stops the iteration with a breakdown.
pub const BREAKDOWN_CURVATURE: f64 = 1e-300;

const SYMMETRY_PAIRS: u64 = 8;
const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Symmetric positive-definite linear action on vectors of length `dim()`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x).expect("operator dimension")
    }
}

impl LinearOperator for SpdMatrix {
    fn dim(&self) -> usize {
        SpdMatrix::dim(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix().matvec(x).expect("operator dimension")
    }
}

/// Checks `⟨A x, y⟩ = ⟨x, A y⟩` on seeded random pairs, relative to
/// `‖A x‖‖y‖ + ‖x‖‖A y‖`.
pub fn check_symmetry(op: &dyn LinearOperator, seed: u64) -> Result<()> {
    let n = op.dim();
    for k in 0..SYMMETRY_PAIRS {
        let mut rng = instance_rng(seed, k);
        let x = gaussian_vector(&mut rng, n);
        let y = gaussian_vector(&mut rng, n);
        let ax = op.apply(&x);
        let ay = op.apply(&y);
        let scale = norm2(&ax) * norm2(&y) + norm2(&x) * norm2(&ay);
        let mismatch = (dot(&ax, &y) - dot(&x, &ay)).abs();
        if mismatch > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NonSymmetricOperator {
                mismatch: mismatch / scale,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct PcgOptions {
    pub tol: f64,
    /// Defaults to `10 · dim` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_iter: None,
        }
    }
}

impl PcgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PcgTrace {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// True residual norms `‖b − A x_k‖₂`, starting with `x₀ = 0`.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
}

impl PcgTrace {
    pub fn final_relative_residual(&self, rhs_norm: f64) -> f64 {
        let last = self.residual_norms.last().copied().unwrap_or(0.0);
        if rhs_norm == 0.0 {
            last
        } else {
            last / rhs_norm
        }
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn true_residual(system: &dyn LinearOperator, rhs: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = system.apply(x);
    rhs.iter().zip(ax).map(|(b, v)| b - v).collect()
}

/// Preconditioned CG from `x₀ = 0`, stopping once `‖b − A x_k‖₂ ≤ tol ‖b‖₂`.
///
/// Running out of iterations is not an error: the trace comes back with
/// `converged == false`.
pub fn pcg(
    system: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    rhs: &[f64],
    opts: PcgOptions,
) -> Result<PcgTrace> {
    let n = system.dim();
    if precond.dim() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "system {n}, preconditioner {}, right-hand side {}",
            precond.dim(),
            rhs.len()
        )));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n);
    let target = opts.tol * norm2(rhs);

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut residual_norms = vec![norm2(&r)];
    if residual_norms[0] <= target {
        return Ok(PcgTrace {
            solution: x,
            iterations: 0,
            residual_norms,
            converged: true,
        });
    }

    let mut z = precond.apply(&r);
    let mut rz = dot(&r, &z);
    let mut p = z.clone();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        if !(rz > 0.0) {
            return Err(Error::BreakdownDetected {
                iteration: iterations,
                curvature: rz,
            });
        }
        let ap = system.apply(&p);
        let curvature = dot(&p, &ap);
        if !(curvature > BREAKDOWN_CURVATURE) {
            return Err(Error::BreakdownDetected {
                iteration: iterations + 1,
                curvature,
            });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;

        let res = norm2(&true_residual(system, rhs, &x));
        residual_norms.push(res);
        if res <= target {
            converged = true;
            break;
        }

        z = precond.apply(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    Ok(PcgTrace {
        solution: x,
        iterations,
        residual_norms,
        converged,
    })
}

/// Unpreconditioned CG.
pub fn cg(system: &dyn LinearOperator, rhs: &[f64], opts: PcgOptions) -> Result<PcgTrace> {
    pcg(system, &IdentityOperator(system.dim()), rhs, opts)
}

/// `x ↦ Aᵀ W⁻¹ A x`.
#[derive(Debug, Clone)]
pub struct WlsqSystem {
    a: DenseMatrix,
    w: SpdMatrix,
}

impl LinearOperator for WlsqSystem {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.matvec(x).expect("operator dimension");
        let winv = self.w.solve(&ax).expect("validated factor");
        self.a.matvec_transpose(&winv).expect("operator dimension")
    }
}

/// `x ↦ Ã⁻¹ W Ã⁻ᵀ x`.
#[derive(Debug, Clone)]
pub struct WlsqPreconditioner {
    lu: Lu,
    w: SpdMatrix,
}

impl LinearOperator for WlsqPreconditioner {
    fn dim(&self) -> usize {
        self.lu.dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y = self.lu.solve_transpose(x).expect("operator dimension");
        let wy = self.w.apply(&y).expect("operator dimension");
        self.lu.solve(&wy).expect("operator dimension")
    }
}

/// Normal-equation operator and its `Ã`-based preconditioner; both pass a
/// symmetry self-test before being returned.
pub fn wlsq_operators(
    a: &DenseMatrix,
    a_tilde: &DenseMatrix,
    w: &SpdMatrix,
) -> Result<(WlsqSystem, WlsqPreconditioner)> {
    let n = a.require_square()?;
    if a_tilde.rows() != n || a_tilde.cols() != n || w.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n}, approximation {}x{}, W {2}x{2}",
            a_tilde.rows(),
            a_tilde.cols(),
            w.dim()
        )));
    }
    Lu::new(a)?;
    let system = WlsqSystem {
        a: a.clone(),
        w: w.clone(),
    };
    let precond = WlsqPreconditioner {
        lu: Lu::new(a_tilde)?,
        w: w.clone(),
    };
    check_symmetry(&system, 0)?;
    check_symmetry(&precond, 1)?;
    Ok((system, precond))
}

/// Normal-equations right-hand side `Aᵀ W⁻¹ y` for a Gaussian observation
/// vector `y` drawn from stream `(seed, 0)`.
pub fn wlsq_benchmark_rhs(a: &DenseMatrix, w: &SpdMatrix, seed: u64) -> Result<Vec<f64>> {
    let y = gaussian_vector(&mut instance_rng(seed, 0), a.rows());
    a.matvec_transpose(&w.solve(&y)?)
}

/// Background right-hand side `Lᵀ D⁻¹ b` for a Gaussian `b` drawn from
/// stream `(seed, 0)`.
pub fn fourdvar_benchmark_rhs(
    layout: &FourDVarLayout,
    cov: &BlockCovariances,
    seed: u64,
) -> Result<Vec<f64>> {
    cov.validate(layout)?;
    let b = gaussian_vector(&mut instance_rng(seed, 0), layout.dim());
    let dinv = split_apply(&cov.d_blocks, &b, SpdMatrix::solve);
    layout.l_operator().apply_transpose(&dinv)
}

fn split_apply(
    blocks: &[SpdMatrix],
    x: &[f64],
    f: impl Fn(&SpdMatrix, &[f64]) -> Result<Vec<f64>>,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut offset = 0;
    for b in blocks {
        out.extend(f(b, &x[offset..offset + b.dim()]).expect("block dimension"));
        offset += b.dim();
    }
    out
}

/// `x ↦ Lᵀ D⁻¹ L x + Hᵀ R⁻¹ H x`, block by block.
#[derive(Debug, Clone)]
pub struct FourDVarSystem {
    l: BlockBidiagonal,
    cov: BlockCovariances,
}

impl LinearOperator for FourDVarSystem {
    fn dim(&self) -> usize {
        self.l.dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let lx = self.l.apply(x).expect("operator dimension");
        let dinv = split_apply(&self.cov.d_blocks, &lx, SpdMatrix::solve);
        let mut out = self.l.apply_transpose(&dinv).expect("operator dimension");
        if let Some(obs) = &self.cov.observations {
            let n = self.l.block_size();
            for (j, (h, r)) in obs.h_blocks.iter().zip(&obs.r_blocks).enumerate() {
                let seg = j * n..(j + 1) * n;
                let hx = h.matvec(&x[seg.clone()]).expect("block dimension");
                let rinv = r.solve(&hx).expect("validated factor");
                let back = h.matvec_transpose(&rinv).expect("block dimension");
                for (o, v) in out[seg].iter_mut().zip(back) {
                    *o += v;
                }
            }
        }
        out
    }
}

/// `x ↦ L̃⁻¹ D L̃⁻ᵀ x` through block substitution.
#[derive(Debug, Clone)]
pub struct FourDVarPreconditioner {
    l_tilde: BlockBidiagonal,
    d_blocks: Vec<SpdMatrix>,
}

impl LinearOperator for FourDVarPreconditioner {
    fn dim(&self) -> usize {
        self.l_tilde.dim()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y = self.l_tilde.solve(x, true).expect("operator dimension");
        let dy = split_apply(&self.d_blocks, &y, SpdMatrix::apply);
        self.l_tilde.solve(&dy, false).expect("operator dimension")
    }
}

pub fn fourdvar_operators(
    layout: &FourDVarLayout,
    cov: &BlockCovariances,
) -> Result<(FourDVarSystem, FourDVarPreconditioner)> {
    cov.validate(layout)?;
    let system = FourDVarSystem {
        l: layout.l_operator(),
        cov: cov.clone(),
    };
    let precond = FourDVarPreconditioner {
        l_tilde: layout.l_tilde_operator(),
        d_blocks: cov.d_blocks.clone(),
    };
    check_symmetry(&system, 0)?;
    check_symmetry(&precond, 1)?;
    Ok((system, precond))
}
