//! Randomized invariant suite over seeded instances.
//!
//! Instance `i` of every check draws from its own stream, so any single
//! failure can be replayed from `(seed, i)` alone.

use std::fmt;

use crate::error::Result;
use crate::fourdvar::{
    background_spectrum_check, error_blocks, error_matrix_direct, rho_bound, VariantKind,
};
use crate::linalg::{norm2, sym_eigen_decomposition, triangular_solve, DenseMatrix, Lu, SpdMatrix};
use crate::random::{
    gaussian_vector, instance_rng, random_covariances, random_instance, random_layout,
};
use crate::theory::{verify_spectrum, whitened_ratio, SpectrumBall, CONTAINMENT_SLACK};

const LAYOUT_STREAM: u64 = 1 << 32;
const QUOTIENT_STREAM: u64 = 2 << 32;
const QUOTIENT_SAMPLES: usize = 8;

const LAYOUT_MAX_N: usize = 4;
const LAYOUT_MAX_WINDOWS: usize = 6;
const LAYOUT_MAX_KAPPA_D: f64 = 100.0;

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub count: usize,
    pub max_dim: usize,
    pub seed: u64,
    /// Multiplies every containment radius before checking. Values below one
    /// make the suite fail on purpose.
    pub radius_scale: f64,
}

impl SuiteConfig {
    pub fn new(count: usize, max_dim: usize, seed: u64) -> Self {
        Self {
            count,
            max_dim,
            seed,
            radius_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Containment,
    ConditionBound,
    Positivity,
    RayleighQuotients,
    ErrorBlocks,
    RhoBound,
    ZeroVariantNorm,
    BackgroundContainment,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Containment,
        Check::ConditionBound,
        Check::Positivity,
        Check::RayleighQuotients,
        Check::ErrorBlocks,
        Check::RhoBound,
        Check::ZeroVariantNorm,
        Check::BackgroundContainment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Containment => "containment",
            Check::ConditionBound => "condition-bound",
            Check::Positivity => "positivity",
            Check::RayleighQuotients => "rayleigh-quotients",
            Check::ErrorBlocks => "error-blocks",
            Check::RhoBound => "rho-bound",
            Check::ZeroVariantNorm => "zero-variant-norm",
            Check::BackgroundContainment => "background-containment",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub check: Check,
    pub seed: u64,
    pub index: usize,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} failed at seed {} instance {}: {}",
            self.check.name(),
            self.seed,
            self.index,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Tally {
    pub passed: usize,
    pub total: usize,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub tallies: Vec<(Check, Tally)>,
    /// Max over instances of `(max |λ − 1| − r) / r`.
    pub worst_slack: f64,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn tally(&self, check: Check) -> Tally {
        self.tallies
            .iter()
            .find(|(c, _)| *c == check)
            .map(|(_, t)| *t)
            .unwrap_or_default()
    }
}

struct Recorder {
    seed: u64,
    tallies: Vec<(Check, Tally)>,
    violations: Vec<Violation>,
}

impl Recorder {
    fn record(&mut self, check: Check, index: usize, ok: bool, detail: impl FnOnce() -> String) {
        let t = &mut self
            .tallies
            .iter_mut()
            .find(|(c, _)| *c == check)
            .expect("every check has a tally")
            .1;
        t.total += 1;
        if ok {
            t.passed += 1;
        } else {
            self.violations.push(Violation {
                check,
                seed: self.seed,
                index,
                detail: detail(),
            });
        }
    }
}

pub fn run_suite(config: SuiteConfig) -> Result<SuiteReport> {
    let mut rec = Recorder {
        seed: config.seed,
        tallies: Check::ALL.iter().map(|&c| (c, Tally::default())).collect(),
        violations: Vec::new(),
    };
    let mut worst_slack = f64::NEG_INFINITY;
    for i in 0..config.count {
        worst_slack = worst_slack.max(least_squares_checks(&config, i, &mut rec)?);
        layout_checks(&config, i, &mut rec)?;
    }
    Ok(SuiteReport {
        config,
        tallies: rec.tallies,
        worst_slack,
        violations: rec.violations,
    })
}

fn least_squares_checks(config: &SuiteConfig, i: usize, rec: &mut Recorder) -> Result<f64> {
    let inst = random_instance(config.seed, i as u64, config.max_dim);
    let report = verify_spectrum(&inst.a, &inst.a_tilde, &inst.w)?;

    let radius = report.ball.radius * config.radius_scale;
    let ball = SpectrumBall::with_radius(radius);
    let deviation = report.max_deviation();
    rec.record(
        Check::Containment,
        i,
        ball.contains_all(&report.eigenvalues),
        || format!("max |lambda - 1| = {deviation:e} exceeds radius {radius:e}"),
    );
    let slack = if radius > 0.0 {
        (deviation - radius) / radius
    } else {
        0.0
    };

    if let Some(bound) = report.cond_bound {
        let measured = report.cond_measured;
        rec.record(
            Check::ConditionBound,
            i,
            measured <= bound * (1.0 + CONTAINMENT_SLACK),
            || format!("condition {measured:e} exceeds bound {bound:e}"),
        );
    }

    let lo = report.lambda_min();
    rec.record(Check::Positivity, i, lo > 0.0, || {
        format!("smallest eigenvalue {lo:e}")
    });

    let ok = rayleigh_quotients_bracketed(config, i, &inst.a, &inst.a_tilde, &inst.w)?;
    rec.record(Check::RayleighQuotients, i, ok.is_none(), || {
        ok.unwrap_or_default()
    });
    Ok(slack)
}

/// Quotients `xᵀNx / xᵀPx` at random `x` stay within `[λ_min, λ_max]`, and at
/// the extreme generalized eigenvectors reproduce the extremes. Returns a
/// description of the first failure.
fn rayleigh_quotients_bracketed(
    config: &SuiteConfig,
    i: usize,
    a: &DenseMatrix,
    a_tilde: &DenseMatrix,
    w: &SpdMatrix,
) -> Result<Option<String>> {
    let x = whitened_ratio(a, a_tilde, w)?;
    let eig = sym_eigen_decomposition(&x.gram())?;
    let lo = eig.values[0];
    let hi = *eig.values.last().expect("non-empty spectrum");
    let tol = 1e-9 * hi;
    let lu = Lu::new(a_tilde)?;
    let g = w.cholesky_factor();
    let quotient = |u: &[f64]| -> Result<f64> {
        let v = lu.solve(&g.matvec(u)?)?;
        let num = norm2(&triangular_solve(g, &a.matvec(&v)?, false)?);
        let den = norm2(&triangular_solve(g, &a_tilde.matvec(&v)?, false)?);
        Ok((num / den).powi(2))
    };
    let n = a.rows();
    let mut rng = instance_rng(config.seed, QUOTIENT_STREAM + i as u64);
    for _ in 0..QUOTIENT_SAMPLES {
        let q = quotient(&gaussian_vector(&mut rng, n))?;
        if q < lo - tol || q > hi + tol {
            return Ok(Some(format!("quotient {q:e} outside [{lo:e}, {hi:e}]")));
        }
    }
    for (k, target) in [(0, lo), (n - 1, hi)] {
        let q = quotient(&eig.vectors.column(k))?;
        if (q - target).abs() > 1e-8 * hi {
            return Ok(Some(format!(
                "quotient {q:e} at the eigenvector of {target:e}"
            )));
        }
    }
    Ok(None)
}

fn layout_checks(config: &SuiteConfig, i: usize, rec: &mut Recorder) -> Result<()> {
    let kind = [
        VariantKind::Zero,
        VariantKind::Identity,
        VariantKind::Custom,
    ][i % 3];
    let mut rng = instance_rng(config.seed, LAYOUT_STREAM + i as u64);
    let layout = random_layout(&mut rng, LAYOUT_MAX_N, LAYOUT_MAX_WINDOWS, kind);
    let cov = random_covariances(&mut rng, &layout, LAYOUT_MAX_KAPPA_D);

    let formula = error_blocks(&layout);
    let direct = error_matrix_direct(&layout);
    let gap = formula.sub(&direct)?.max_abs();
    rec.record(Check::ErrorBlocks, i, gap <= 1e-12, || {
        format!("{kind} layout: block formula and L L~^-1 - I differ by {gap:e}")
    });

    let check = background_spectrum_check(&layout, &cov)?;
    let eigs = &check.report.eigenvalues;
    let scaled = |r: f64| SpectrumBall::with_radius(r * config.radius_scale);
    let e_ball = scaled(check.report.ball.radius);
    let mut contained = e_ball.contains_all(eigs);
    if let (Some(rho), Some(rho_ball)) = (check.rho, check.rho_ball) {
        contained &= scaled(rho_ball.radius).contains_all(eigs);
        let e_norm = check.report.e_norm;
        rec.record(
            Check::RhoBound,
            i,
            e_norm <= rho * (1.0 + CONTAINMENT_SLACK),
            || format!("{kind} layout: |E| = {e_norm:e} exceeds rho = {rho:e}"),
        );
        if kind == VariantKind::Zero {
            let max_sigma = rho_bound(&layout)?;
            let ok = if max_sigma == 0.0 {
                e_norm == 0.0
            } else {
                (e_norm - max_sigma).abs() <= 1e-10 * max_sigma
            };
            rec.record(Check::ZeroVariantNorm, i, ok, || {
                format!("|E| = {e_norm:e} but max sigma(M_j) = {max_sigma:e}")
            });
        }
    }
    let dev = check.report.max_deviation();
    rec.record(Check::BackgroundContainment, i, contained, || {
        format!("{kind} layout: max |lambda - 1| = {dev:e} outside a containment ball")
    });
    Ok(())
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "random suite: {} instances, max dimension {}, seed {}",
            self.config.count, self.config.max_dim, self.config.seed
        )?;
        for (check, t) in &self.tallies {
            writeln!(f, "  {:<24} {}/{}", check.name(), t.passed, t.total)?;
        }
        writeln!(f, "  worst containment slack  {:e}", self.worst_slack)?;
        for v in &self.violations {
            writeln!(f, "VIOLATION {v}")?;
        }
        write!(
            f,
            "{}",
            if self.passed() {
                "all checks passed"
            } else {
                "checks failed"
            }
        )
    }
}
