//! Preconditioning weighted least-squares with an approximate model matrix.
//!
//! For nonsingular `A`, `Ã` and SPD `W`, the preconditioner `P = Ãᵀ W⁻¹ Ã` is
//! applied to the normal matrix `N = Aᵀ W⁻¹ A`. With `E = A Ã⁻¹ − I`, every
//! eigenvalue of `A_p = P⁻¹ N` lies in the closed interval around 1 of radius
//! `(1 + κ₂(W)) ‖E‖₂ + κ₂(W) ‖E‖₂²`. When that radius `r` is below one, the
//! condition number of `A_p` is bounded by `(1 + r) / (1 − r)`.
//!
//! Spectra are computed on the symmetric matrix `XᵀX` with
//! `X = G⁻¹ (A Ã⁻¹) G` and `W = G Gᵀ`, which is similar to
//! `W Ã⁻ᵀ Aᵀ W⁻¹ A Ã⁻¹` and hence to `A_p`. `N` and `P` are never formed, so
//! the conditioning of `A` itself does not enter the computation.

use crate::error::{Error, Result};
use crate::linalg::{
    generalized_eigs, spd_condition, spectral_norm, sym_eigen, DenseMatrix, Lu, SpdMatrix,
};

/// Relative slack used when testing eigenvalues against the containment ball.
pub const CONTAINMENT_SLACK: f64 = 1e-9;

/// `E = A Ã⁻¹ − I` and its spectral norm.
#[derive(Debug, Clone)]
pub struct ErrorSummary {
    pub e: DenseMatrix,
    pub e_norm: f64,
}

/// Closed ball `B(1, radius)` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumBall {
    pub center: f64,
    pub radius: f64,
}

impl SpectrumBall {
    pub fn new(e_norm: f64, kappa_w: f64) -> Self {
        Self {
            center: 1.0,
            radius: spectrum_radius(e_norm, kappa_w),
        }
    }

    pub fn with_radius(radius: f64) -> Self {
        Self {
            center: 1.0,
            radius,
        }
    }

    pub fn contains(&self, lambda: f64) -> bool {
        (lambda - self.center).abs() <= self.radius + CONTAINMENT_SLACK * (1.0 + self.radius)
    }

    pub fn contains_all(&self, eigenvalues: &[f64]) -> bool {
        eigenvalues.iter().all(|&l| self.contains(l))
    }
}

#[derive(Debug, Clone)]
pub struct PrecondReport {
    /// Ascending eigenvalues of `A_p`.
    pub eigenvalues: Vec<f64>,
    pub ball: SpectrumBall,
    pub cond_measured: f64,
    /// Present iff `admissible`.
    pub cond_bound: Option<f64>,
    pub admissible: bool,
    pub contained: bool,
    pub kappa_w: f64,
    pub e_norm: f64,
}

impl PrecondReport {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(1.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(1.0)
    }

    /// `max |λ − 1|` over the spectrum.
    pub fn max_deviation(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0, |m, l| m.max((l - 1.0).abs()))
    }

    /// `(max |λ − 1| − radius) / radius`; negative while the spectrum is inside
    /// the ball. `None` for a zero radius.
    pub fn relative_slack(&self) -> Option<f64> {
        (self.ball.radius > 0.0)
            .then(|| (self.max_deviation() - self.ball.radius) / self.ball.radius)
    }
}

fn check_square_pair(a: &DenseMatrix, a_tilde: &DenseMatrix) -> Result<usize> {
    let n = a.require_square()?;
    if a_tilde.rows() != n || a_tilde.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n} but the approximation is {}x{}",
            a_tilde.rows(),
            a_tilde.cols()
        )));
    }
    Ok(n)
}

fn check_weight(n: usize, w: &SpdMatrix) -> Result<()> {
    if w.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n} but W is {0}x{0}",
            w.dim()
        )));
    }
    Ok(())
}

/// `Aᵀ W⁻¹ A`, formed as `BᵀB` with `B = G⁻¹ A` and `W = G Gᵀ`.
pub fn normal_matrix(a: &DenseMatrix, w: &SpdMatrix) -> Result<SpdMatrix> {
    let n = a.require_square()?;
    check_weight(n, w)?;
    SpdMatrix::new(w.whiten(a)?.gram())
}

/// `A Ã⁻¹`, row by row from `Ãᵀ xᵢ = aᵢ`.
fn model_ratio(a: &DenseMatrix, a_tilde: &DenseMatrix) -> Result<DenseMatrix> {
    let n = check_square_pair(a, a_tilde)?;
    let lu = Lu::new(a_tilde)?;
    let mut z = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let row = lu.solve_transpose(a.row(i))?;
        for (j, v) in row.into_iter().enumerate() {
            z[(i, j)] = v;
        }
    }
    Ok(z)
}

pub fn approximation_error(a: &DenseMatrix, a_tilde: &DenseMatrix) -> Result<ErrorSummary> {
    let mut e = model_ratio(a, a_tilde)?;
    for i in 0..e.rows() {
        e[(i, i)] -= 1.0;
    }
    let e_norm = spectral_norm(&e)?;
    Ok(ErrorSummary { e, e_norm })
}

/// `(1 + κ) e + κ e²`.
pub fn spectrum_radius(e_norm: f64, kappa_w: f64) -> f64 {
    assert!(
        e_norm >= 0.0,
        "error norm must be nonnegative, got {e_norm}"
    );
    assert!(
        kappa_w >= 1.0,
        "condition number must be at least 1, got {kappa_w}"
    );
    if e_norm == 0.0 {
        return 0.0;
    }
    (1.0 + kappa_w) * e_norm + kappa_w * e_norm * e_norm
}

/// `κ(D, C) = λ_max(C⁻¹D) / λ_min(C⁻¹D)`.
pub fn relative_condition(d: &SpdMatrix, c: &SpdMatrix) -> Result<f64> {
    let ev = generalized_eigs(d, c)?;
    Ok(extreme_ratio(&ev))
}

fn extreme_ratio(ev: &[f64]) -> f64 {
    match (ev.first(), ev.last()) {
        (Some(lo), Some(hi)) => hi / lo,
        _ => 1.0,
    }
}

/// Positive root of `κ x² + (1 + κ) x − q = 0`, in the cancellation-free form
/// `2q / ((1 + κ) + √((1 + κ)² + 4κq))`.
fn quadratic_root(kappa: f64, q: f64) -> f64 {
    let b = 1.0 + kappa;
    2.0 * q / (b + (b * b + 4.0 * kappa * q).sqrt())
}

/// Largest `‖E‖₂` (exclusive) for which the radius stays below one.
pub fn admissible_error(kappa_w: f64) -> f64 {
    assert!(
        kappa_w >= 1.0,
        "condition number must be at least 1, got {kappa_w}"
    );
    quadratic_root(kappa_w, 1.0)
}

/// `(1 + r) / (1 − r)` with `r = spectrum_radius(e_norm, kappa_w)`.
pub fn condition_bound(e_norm: f64, kappa_w: f64) -> Result<f64> {
    let threshold = admissible_error(kappa_w);
    let r = spectrum_radius(e_norm, kappa_w);
    if !(e_norm < threshold) || r >= 1.0 {
        return Err(Error::NotAdmissible {
            e_norm,
            kappa: kappa_w,
            threshold,
        });
    }
    Ok((1.0 + r) / (1.0 - r))
}

/// Error norm at which [`condition_bound`] equals `m`.
pub fn error_budget(kappa_w: f64, m: f64) -> f64 {
    assert!(
        kappa_w >= 1.0,
        "condition number must be at least 1, got {kappa_w}"
    );
    assert!(m > 1.0, "target condition number must exceed 1, got {m}");
    let q = if m.is_infinite() {
        1.0
    } else {
        (m - 1.0) / (m + 1.0)
    };
    quadratic_root(kappa_w, q)
}

/// Spectrum of `XᵀX` with `X = G⁻¹ Z G`, `Z = A Ã⁻¹`, `W = G Gᵀ`.
fn spectrum_of_ratio(z: &DenseMatrix, w: &SpdMatrix) -> Result<Vec<f64>> {
    let x = w.whiten(&z.matmul(w.cholesky_factor())?)?;
    let ev = sym_eigen(&x.gram())?;
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

/// `X = G⁻¹ (A Ã⁻¹) G` with `W = G Gᵀ`; `A_p` is similar to `XᵀX`, and for
/// `x = Ã⁻¹ G u` the quotient `xᵀ(AᵀW⁻¹A)x / xᵀ(ÃᵀW⁻¹Ã)x` equals `‖X u‖² / ‖u‖²`.
pub fn whitened_ratio(
    a: &DenseMatrix,
    a_tilde: &DenseMatrix,
    w: &SpdMatrix,
) -> Result<DenseMatrix> {
    let n = check_square_pair(a, a_tilde)?;
    check_weight(n, w)?;
    w.whiten(&model_ratio(a, a_tilde)?.matmul(w.cholesky_factor())?)
}

/// Ascending eigenvalues of `A_p = (Ã⁻¹ W Ã⁻ᵀ)(Aᵀ W⁻¹ A)`.
pub fn preconditioned_spectrum(
    a: &DenseMatrix,
    a_tilde: &DenseMatrix,
    w: &SpdMatrix,
) -> Result<Vec<f64>> {
    let n = check_square_pair(a, a_tilde)?;
    check_weight(n, w)?;
    spectrum_of_ratio(&model_ratio(a, a_tilde)?, w)
}

/// `κ(Aᵀ W⁻¹ A, Ãᵀ W⁻¹ Ã)` from the spectrum of `A_p`.
pub fn preconditioned_condition(
    a: &DenseMatrix,
    a_tilde: &DenseMatrix,
    w: &SpdMatrix,
) -> Result<f64> {
    Ok(extreme_ratio(&preconditioned_spectrum(a, a_tilde, w)?))
}

pub fn verify_spectrum(
    a: &DenseMatrix,
    a_tilde: &DenseMatrix,
    w: &SpdMatrix,
) -> Result<PrecondReport> {
    verify_spectrum_with_kappa(a, a_tilde, w, None)
}

/// As [`verify_spectrum`], using `kappa_w` for `κ₂(W)` when supplied instead
/// of computing it from `w`.
pub fn verify_spectrum_with_kappa(
    a: &DenseMatrix,
    a_tilde: &DenseMatrix,
    w: &SpdMatrix,
    kappa_w: Option<f64>,
) -> Result<PrecondReport> {
    let n = check_square_pair(a, a_tilde)?;
    check_weight(n, w)?;
    let z = model_ratio(a, a_tilde)?;
    let mut e = z.clone();
    for i in 0..n {
        e[(i, i)] -= 1.0;
    }
    let e_norm = spectral_norm(&e)?;
    let kappa_w = match kappa_w {
        Some(k) => k,
        None => spd_condition(w)?,
    };
    let eigenvalues = spectrum_of_ratio(&z, w)?;
    Ok(assemble_report(eigenvalues, e_norm, kappa_w))
}

pub(crate) fn assemble_report(eigenvalues: Vec<f64>, e_norm: f64, kappa_w: f64) -> PrecondReport {
    let ball = SpectrumBall::new(e_norm, kappa_w);
    let cond_bound = condition_bound(e_norm, kappa_w).ok();
    PrecondReport {
        cond_measured: extreme_ratio(&eigenvalues),
        contained: ball.contains_all(&eigenvalues),
        admissible: cond_bound.is_some(),
        cond_bound,
        ball,
        eigenvalues,
        kappa_w,
        e_norm,
    }
}
