//! Two-by-two parametric family with a diagonal weight of condition number
//! `α`, and two lower-triangular approximations of the model matrix:
//! `Plus2` shifts the off-diagonal entry by 2 (fixed error, diverging
//! spectrum) and `Stable` shifts it by `1/α` (error shrinking as `κ₂(W)` grows,
//! spectrum clustering at 1).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SpdMatrix};
use crate::theory::preconditioned_condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantTag {
    Plus2,
    Stable,
}

impl VariantTag {
    pub const ALL: [VariantTag; 2] = [VariantTag::Plus2, VariantTag::Stable];
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariantTag::Plus2 => "plus2",
            VariantTag::Stable => "stable",
        })
    }
}

impl FromStr for VariantTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus2" => Ok(VariantTag::Plus2),
            "stable" => Ok(VariantTag::Stable),
            other => Err(Error::Parse(format!("unknown example variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleVariant {
    tag: VariantTag,
    alpha: f64,
}

impl ExampleVariant {
    pub fn new(tag: VariantTag, alpha: f64) -> Result<Self> {
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(Error::Parse(format!(
                "alpha must be a finite value >= 1, got {alpha}"
            )));
        }
        Ok(Self { tag, alpha })
    }

    pub fn tag(&self) -> VariantTag {
        self.tag
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[derive(Debug, Clone)]
pub struct ExampleInstance {
    pub a: DenseMatrix,
    pub w: SpdMatrix,
    pub a_tilde: DenseMatrix,
}

fn unit_lower(entry: f64) -> DenseMatrix {
    DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![entry, 1.0]]).expect("finite entry")
}

/// `A = [[1,0],[α,1]]`, `W = diag(α, 1)` and the variant's `Ã`.
pub fn example_instance(v: ExampleVariant) -> ExampleInstance {
    let alpha = v.alpha;
    let shift = match v.tag {
        VariantTag::Plus2 => alpha + 2.0,
        VariantTag::Stable => alpha + 1.0 / alpha,
    };
    ExampleInstance {
        a: unit_lower(alpha),
        w: SpdMatrix::from_diagonal(&[alpha, 1.0]).expect("alpha >= 1"),
        a_tilde: unit_lower(shift),
    }
}

/// Closed-form `(λ_min, λ_max)` of the preconditioned matrix.
///
/// Both variants have `det A_p = 1`, so the small root is taken as the
/// reciprocal of the large one.
pub fn closed_form_eigs(v: ExampleVariant) -> (f64, f64) {
    let alpha = v.alpha;
    let lambda_max = match v.tag {
        VariantTag::Plus2 => 1.0 + 2.0 * alpha + 2.0 * (alpha * (alpha + 1.0)).sqrt(),
        VariantTag::Stable => {
            let inv = 1.0 / alpha;
            0.5 * (2.0 + inv + (4.0 * inv + inv * inv).sqrt())
        }
    };
    (1.0 / lambda_max, lambda_max)
}

/// `κ(AᵀA, ÃᵀÃ)` for the `Plus2` approximation, constant in `α` at
/// `17 + 12√2`.
pub fn unweighted_relative_condition(v: ExampleVariant) -> Result<f64> {
    if v.tag != VariantTag::Plus2 {
        return Err(Error::UnsupportedVariant);
    }
    let inst = example_instance(v);
    preconditioned_condition(&inst.a, &inst.a_tilde, &SpdMatrix::identity(2))
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(
        lo > 0.0 && hi >= lo && count >= 2,
        "invalid grid [{lo}, {hi}] x {count}"
    );
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == count - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

/// Default sweep grid: 17 points from 1 to 10⁴.
pub fn default_alpha_grid() -> Vec<f64> {
    log_grid(1.0, 1e4, 17)
}
