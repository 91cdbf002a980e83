//! State formulation of weak-constraint 4D-Var.
//!
//! The state over `N + 1` windows is stacked into one vector of length
//! `n (N + 1)`. `L` is block unit-lower-bidiagonal with `−M_j` below the
//! diagonal, `D = diag(B, Q_1, …, Q_N)`, and the background term `Lᵀ D⁻¹ L`
//! is preconditioned by `L̃⁻¹ D L̃⁻ᵀ` where `L̃` uses approximate blocks `M̃_j`.
//!
//! Solves with `L̃` run sequentially across windows: block `j` needs block
//! `j − 1`, unless every `M̃_j` is zero.

mod block;
mod layout;

pub use block::{apply_linv, BlockBidiagonal};
pub use layout::{
    parse_layout, read_layout_file, write_layout, Approximation, BlockCovariances, FourDVarLayout,
    Observations, VariantKind,
};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, DenseMatrix, SpdMatrix};
use crate::theory::{assemble_report, preconditioned_spectrum, PrecondReport, SpectrumBall};

pub fn assemble_l(layout: &FourDVarLayout) -> DenseMatrix {
    layout.l_operator().to_dense()
}

pub fn assemble_l_tilde(layout: &FourDVarLayout) -> DenseMatrix {
    layout.l_tilde_operator().to_dense()
}

/// `E = L L̃⁻¹ − I` from the block formula: for block row `i > j`,
/// `E_ij = (M̃_i − M_i) M̃_{i−1} ⋯ M̃_{j+1}` (the product is empty when
/// `j = i − 1`); all other blocks vanish.
pub fn error_blocks(layout: &FourDVarLayout) -> DenseMatrix {
    let n = layout.n();
    let models = layout.models();
    let approx = layout.approximate_models();
    let mut e = DenseMatrix::zeros(layout.dim(), layout.dim());
    for i in 1..=layout.n_sw() {
        let diff = approx[i - 1]
            .sub(&models[i - 1])
            .expect("equal block sizes");
        // Walk left from the sub-diagonal, extending the trailing product.
        let mut block = diff;
        for j in (0..i).rev() {
            e.set_block(i * n, j * n, &block);
            if j > 0 {
                block = block.matmul(&approx[j - 1]).expect("equal block sizes");
            }
        }
    }
    e
}

/// `L L̃⁻¹ − I` formed directly: each column of `L̃⁻¹` by block forward
/// substitution, then multiplied by the dense `L`.
pub fn error_matrix_direct(layout: &FourDVarLayout) -> DenseMatrix {
    let dim = layout.dim();
    let l_tilde = layout.l_tilde_operator();
    let mut inv = DenseMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        inv.set_column(
            k,
            &l_tilde
                .solve(&e, false)
                .expect("unit vector of matching length"),
        );
    }
    let mut out = assemble_l(layout).matmul(&inv).expect("square factors");
    for k in 0..dim {
        out[(k, k)] -= 1.0;
    }
    out
}

/// Upper bound on `‖E‖₂` for the zero and identity approximations:
/// `max_j σ_max(M_j)` for zero, and
/// `√((n N + 1)(n N + 2) / 2) · max_j σ_max(I − M_j)` for identity.
pub fn rho_bound(layout: &FourDVarLayout) -> Result<f64> {
    let n = layout.n();
    fn max_sigma(blocks: impl Iterator<Item = DenseMatrix>) -> Result<f64> {
        blocks
            .map(|m| spectral_norm(&m))
            .try_fold(0.0f64, |acc, s| Ok(acc.max(s?)))
    }
    match layout.approximation() {
        Approximation::Zero => max_sigma(layout.models().iter().cloned()),
        Approximation::Identity => {
            let id = DenseMatrix::identity(n);
            let s = max_sigma(layout.models().iter().map(|m| id.sub(m).expect("n x n")))?;
            let nn = (n * layout.n_sw()) as f64;
            Ok(((nn + 1.0) * (nn + 2.0) / 2.0).sqrt() * s)
        }
        Approximation::Custom(_) => Err(Error::UnsupportedVariant),
    }
}

/// Spectrum of the preconditioned background matrix checked against the
/// ball built from the true `‖E‖₂` (in `report`) and against the ball built
/// from the `ρ` bound.
#[derive(Debug, Clone)]
pub struct BackgroundReport {
    pub report: PrecondReport,
    /// `None` for the custom approximation.
    pub rho: Option<f64>,
    pub rho_ball: Option<SpectrumBall>,
    pub contained_rho: Option<bool>,
}

impl BackgroundReport {
    pub fn kappa_d(&self) -> f64 {
        self.report.kappa_w
    }
}

pub fn background_spectrum_check(
    layout: &FourDVarLayout,
    cov: &BlockCovariances,
) -> Result<BackgroundReport> {
    cov.validate(layout)?;
    let kappa_d = cov.kappa_d()?;
    let e_norm = spectral_norm(&error_blocks(layout))?;
    let eigenvalues = preconditioned_spectrum(
        &assemble_l(layout),
        &assemble_l_tilde(layout),
        &cov.d_dense(),
    )?;
    let report = assemble_report(eigenvalues, e_norm, kappa_d);
    let (rho, rho_ball, contained_rho) = match rho_bound(layout) {
        Ok(rho) => {
            let ball = SpectrumBall::new(rho, kappa_d);
            (
                Some(rho),
                Some(ball),
                Some(ball.contains_all(&report.eigenvalues)),
            )
        }
        Err(Error::UnsupportedVariant) => (None, None, None),
        Err(e) => return Err(e),
    };
    Ok(BackgroundReport {
        report,
        rho,
        rho_ball,
        contained_rho,
    })
}

/// `(Lᵀ D⁻¹ L + Hᵀ R⁻¹ H, Lᵀ D⁻¹ b + Hᵀ R⁻¹ d)`; without observations the
/// background term alone.
pub fn assemble_state_system(
    layout: &FourDVarLayout,
    cov: &BlockCovariances,
    b: &[f64],
    d: Option<&[f64]>,
) -> Result<(SpdMatrix, Vec<f64>)> {
    cov.validate(layout)?;
    let dim = layout.dim();
    if b.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "background vector of length {}, expected {dim}",
            b.len()
        )));
    }
    let dd = cov.d_dense();
    let whitened_l = dd.whiten(&assemble_l(layout))?;
    let mut matrix = whitened_l.gram();
    let mut rhs = whitened_l.matvec_transpose(&dd.whiten(&column(b))?.column(0))?;

    match (&cov.observations, d) {
        (None, None) => {}
        (Some(obs), Some(d)) => {
            if d.len() != obs.total_rows() {
                return Err(Error::DimensionMismatch(format!(
                    "observation vector of length {}, expected {}",
                    d.len(),
                    obs.total_rows()
                )));
            }
            let h_refs: Vec<&DenseMatrix> = obs.h_blocks.iter().collect();
            let h = DenseMatrix::block_diagonal(&h_refs);
            let r_refs: Vec<&DenseMatrix> = obs.r_blocks.iter().map(SpdMatrix::matrix).collect();
            let r = SpdMatrix::new(DenseMatrix::block_diagonal(&r_refs))?;
            let whitened_h = r.whiten(&h)?;
            matrix = matrix.add(&whitened_h.gram())?;
            let obs_rhs = whitened_h.matvec_transpose(&r.whiten(&column(d))?.column(0))?;
            for (x, y) in rhs.iter_mut().zip(obs_rhs) {
                *x += y;
            }
        }
        (Some(_), None) => {
            return Err(Error::DimensionMismatch(
                "observation operators given without an observation vector".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(Error::DimensionMismatch(
                "observation vector given without observation operators".into(),
            ))
        }
    }
    Ok((SpdMatrix::new(matrix)?, rhs))
}

fn column(v: &[f64]) -> DenseMatrix {
    DenseMatrix::new(v.len(), 1, v.to_vec()).expect("finite vector")
}
