//! Command implementations behind the `wlsq` binary.
//!
//! Each command returns its text report and CSV payload instead of printing,
//! so the binary only decides where output goes and which exit code to use.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fourdvar::{
    background_spectrum_check, read_layout_file, Approximation, BlockCovariances, FourDVarLayout,
    VariantKind,
};
use crate::gallery::{closed_form_eigs, example_instance, log_grid, ExampleVariant, VariantTag};
use crate::krylov::{cg, fourdvar_benchmark_rhs, fourdvar_operators, pcg, PcgOptions};
use crate::linalg::io::{format_real, read_matrix_file};
use crate::linalg::SpdMatrix;
use crate::suite::{run_suite, SuiteConfig};
use crate::theory::{admissible_error, error_budget, verify_spectrum, PrecondReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Violation(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Input(_) => 1,
            HarnessError::Violation(_) => 2,
        }
    }
}

fn input(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Input(e.to_string())
}

/// Text report, CSV payload, and an optional failed check. A failed check
/// still carries its output.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub text: String,
    pub csv: String,
    pub violation: Option<String>,
}

fn real(x: f64) -> String {
    format_real(x)
}

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), format_real)
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

// ---- verify ----

pub const VERIFY_HEADER: &str =
    "kappa_w,enorm,radius,lambda_min,lambda_max,cond_measured,cond_bound_or_nan,admissible,contained";

pub fn verify_files(
    a_path: &Path,
    a_tilde_path: &Path,
    w_path: &Path,
) -> Result<PrecondReport, HarnessError> {
    let a = read_matrix_file(a_path).map_err(input)?;
    let a_tilde = read_matrix_file(a_tilde_path).map_err(input)?;
    let w = read_matrix_file(w_path).map_err(input)?;
    let named = |path: &Path, e: &dyn std::fmt::Display| input(format!("{}: {e}", path.display()));
    if !a.is_square() {
        return Err(named(
            a_path,
            &format!("A must be square, got {}x{}", a.rows(), a.cols()),
        ));
    }
    let n = a.rows();
    if a_tilde.rows() != n || a_tilde.cols() != n {
        return Err(named(
            a_tilde_path,
            &format!(
                "approximation is {}x{}, A is {n}x{n}",
                a_tilde.rows(),
                a_tilde.cols()
            ),
        ));
    }
    if w.rows() != n || w.cols() != n {
        return Err(named(
            w_path,
            &format!("W is {}x{}, A is {n}x{n}", w.rows(), w.cols()),
        ));
    }
    let w = SpdMatrix::new(w).map_err(|e| named(w_path, &e))?;
    verify_spectrum(&a, &a_tilde, &w).map_err(|e| {
        input(format!(
            "{} / {}: {e}",
            a_path.display(),
            a_tilde_path.display()
        ))
    })
}

pub fn verify_csv_row(r: &PrecondReport) -> String {
    [
        real(r.kappa_w),
        real(r.e_norm),
        real(r.ball.radius),
        real(r.lambda_min()),
        real(r.lambda_max()),
        real(r.cond_measured),
        opt_real(r.cond_bound),
        flag(r.admissible).into(),
        flag(r.contained).into(),
    ]
    .join(",")
}

pub fn verify_text(r: &PrecondReport) -> String {
    let mut s = String::new();
    let rows = [
        ("kappa_w", real(r.kappa_w)),
        ("enorm", real(r.e_norm)),
        ("radius", real(r.ball.radius)),
        ("lambda_min", real(r.lambda_min())),
        ("lambda_max", real(r.lambda_max())),
        ("cond_measured", real(r.cond_measured)),
        ("admissible", flag(r.admissible).into()),
        ("cond_bound", opt_real(r.cond_bound)),
        ("contained", flag(r.contained).into()),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<14} {v}");
    }
    s
}

pub fn cmd_verify(a: &Path, a_tilde: &Path, w: &Path) -> Result<CommandOutput, HarnessError> {
    let report = verify_files(a, a_tilde, w)?;
    Ok(CommandOutput {
        text: verify_text(&report),
        csv: format!("{VERIFY_HEADER}\n{}\n", verify_csv_row(&report)),
        violation: (!report.contained).then(|| "spectrum escapes the containment ball".to_string()),
    })
}

// ---- example-sweep ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantSelector {
    Plus2,
    Stable,
    Both,
}

impl VariantSelector {
    pub fn tags(self) -> Vec<VariantTag> {
        match self {
            VariantSelector::Plus2 => vec![VariantTag::Plus2],
            VariantSelector::Stable => vec![VariantTag::Stable],
            VariantSelector::Both => VariantTag::ALL.to_vec(),
        }
    }
}

impl std::str::FromStr for VariantSelector {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus2" => Ok(VariantSelector::Plus2),
            "stable" => Ok(VariantSelector::Stable),
            "both" => Ok(VariantSelector::Both),
            other => Err(input(format!(
                "unknown variant '{other}' (expected plus2, stable, both)"
            ))),
        }
    }
}

/// Log-spaced parameter grid plus the run's selectors.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub variants: VariantSelector,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.hi > 0.0) {
            return Err(input(format!(
                "grid bounds must be positive and finite, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.hi <= self.lo {
            return Err(input(format!(
                "grid upper bound {} must exceed {}",
                self.hi, self.lo
            )));
        }
        if self.count < 2 {
            return Err(input(format!(
                "grid needs at least 2 points, got {}",
                self.count
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.lo, self.hi, self.count)
    }
}

pub const SWEEP_HEADER: &str = "alpha,variant,lambda_min,lambda_max,lambda_min_closed,lambda_max_closed,enorm,kappa_w,radius,cond_measured,cond_bound_or_nan,contained";

pub fn cmd_example_sweep(spec: &SweepSpec) -> Result<CommandOutput, HarnessError> {
    spec.validate()?;
    if spec.lo < 1.0 {
        return Err(input(format!("alpha must be at least 1, got {}", spec.lo)));
    }
    let mut csv = format!("{SWEEP_HEADER}\n");
    let mut escaped = Vec::new();
    for alpha in spec.grid() {
        for tag in spec.variants.tags() {
            let v = ExampleVariant::new(tag, alpha).map_err(input)?;
            let inst = example_instance(v);
            let r = verify_spectrum(&inst.a, &inst.a_tilde, &inst.w)
                .map_err(|e| HarnessError::Violation(format!("{tag} at alpha {alpha}: {e}")))?;
            let (lo, hi) = closed_form_eigs(v);
            let _ = writeln!(
                csv,
                "{},{tag},{},{},{},{},{},{},{},{},{},{}",
                real(alpha),
                real(r.lambda_min()),
                real(r.lambda_max()),
                real(lo),
                real(hi),
                real(r.e_norm),
                real(r.kappa_w),
                real(r.ball.radius),
                real(r.cond_measured),
                opt_real(r.cond_bound),
                flag(r.contained),
            );
            if !r.contained {
                escaped.push(format!("{tag} at alpha {}", real(alpha)));
            }
        }
    }
    Ok(CommandOutput {
        text: String::new(),
        csv,
        violation: (!escaped.is_empty()).then(|| {
            format!(
                "spectrum escapes the containment ball: {}",
                escaped.join("; ")
            )
        }),
    })
}

// ---- figure1 ----

pub const FIGURE1_DEFAULT_POINTS: usize = 60;
pub const FIGURE1_DEFAULT_M: [f64; 2] = [10.0, 100.0];

pub fn cmd_figure1(
    lo: f64,
    hi: f64,
    count: usize,
    m_values: &[f64],
) -> Result<CommandOutput, HarnessError> {
    let spec = SweepSpec {
        lo,
        hi,
        count,
        variants: VariantSelector::Both,
        output: None,
        seed: 0,
    };
    spec.validate()?;
    if lo < 1.0 {
        return Err(input(format!(
            "kappa grid must start at 1 or above, got {lo}"
        )));
    }
    if m_values.is_empty() {
        return Err(input("at least one M value is required"));
    }
    if let Some(m) = m_values.iter().find(|m| !(m.is_finite() && **m > 1.0)) {
        return Err(input(format!(
            "M values must be finite and greater than 1, got {m}"
        )));
    }
    let mut csv = String::from("kappa_w,admissible_error");
    for m in m_values {
        let _ = write!(csv, ",g_m{m}");
    }
    csv.push('\n');
    for kappa in spec.grid() {
        csv.push_str(&real(kappa));
        csv.push(',');
        csv.push_str(&real(admissible_error(kappa)));
        for &m in m_values {
            csv.push(',');
            csv.push_str(&real(error_budget(kappa, m)));
        }
        csv.push('\n');
    }
    Ok(CommandOutput {
        csv,
        ..Default::default()
    })
}

// ---- fourdvar-demo ----

#[derive(Debug, Clone)]
pub struct DemoOptions {
    /// Restricts the analysis to one approximation.
    pub variant: Option<VariantKind>,
    pub background_var: f64,
    pub model_var: f64,
    /// Adds identity observations with this variance to the solved system.
    pub obs_var: Option<f64>,
    pub tol: f64,
    pub seed: u64,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            variant: None,
            background_var: 1.0,
            model_var: 1.0,
            obs_var: None,
            tol: crate::krylov::DEFAULT_TOLERANCE,
            seed: crate::random::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoRow {
    pub variant: VariantKind,
    pub rho: Option<f64>,
    pub e_norm: f64,
    pub kappa_d: f64,
    pub radius: f64,
    pub radius_rho: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub contained: bool,
    pub contained_rho: Option<bool>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub n: usize,
    pub n_sw: usize,
    pub unpreconditioned_iterations: usize,
    pub unpreconditioned_converged: bool,
    pub rows: Vec<DemoRow>,
}

pub const DEMO_HEADER: &str = "variant,rho_or_nan,enorm,kappa_d,radius,radius_rho_or_nan,lambda_min,lambda_max,contained,contained_rho,pcg_iterations,pcg_converged,cg_iterations";

fn approximation_for(
    layout: &FourDVarLayout,
    kind: VariantKind,
) -> Result<Approximation, HarnessError> {
    match kind {
        VariantKind::Zero => Ok(Approximation::Zero),
        VariantKind::Identity => Ok(Approximation::Identity),
        VariantKind::Custom => match layout.approximation() {
            Approximation::Custom(blocks) => Ok(Approximation::Custom(blocks.clone())),
            _ => Err(input(
                "custom variant requested but the layout carries no approximate blocks",
            )),
        },
    }
}

pub fn fourdvar_demo(
    layout: &FourDVarLayout,
    opts: &DemoOptions,
) -> Result<DemoReport, HarnessError> {
    if !(opts.tol > 0.0) {
        return Err(input(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let background = BlockCovariances::scaled_identity(layout, opts.background_var, opts.model_var)
        .map_err(input)?;
    let solve_cov = match opts.obs_var {
        Some(v) => background
            .clone()
            .with_identity_observations(layout, v)
            .map_err(input)?,
        None => background.clone(),
    };
    let kinds = match opts.variant {
        Some(k) => vec![k],
        None => {
            let mut k = vec![VariantKind::Zero, VariantKind::Identity];
            if layout.approximation().kind() == VariantKind::Custom {
                k.push(VariantKind::Custom);
            }
            k
        }
    };
    let pcg_opts = PcgOptions::with_tol(opts.tol);
    let rhs = fourdvar_benchmark_rhs(layout, &solve_cov, opts.seed).map_err(input)?;
    let (system, _) = fourdvar_operators(layout, &solve_cov).map_err(input)?;
    let plain = cg(&system, &rhs, pcg_opts).map_err(|e| HarnessError::Violation(e.to_string()))?;

    let mut rows = Vec::new();
    for kind in kinds {
        let variant_layout = layout
            .with_approximation(approximation_for(layout, kind)?)
            .map_err(input)?;
        let check = background_spectrum_check(&variant_layout, &background).map_err(input)?;
        let (system, precond) = fourdvar_operators(&variant_layout, &solve_cov).map_err(input)?;
        let trace = pcg(&system, &precond, &rhs, pcg_opts)
            .map_err(|e| HarnessError::Violation(e.to_string()))?;
        rows.push(DemoRow {
            variant: kind,
            rho: check.rho,
            e_norm: check.report.e_norm,
            kappa_d: check.kappa_d(),
            radius: check.report.ball.radius,
            radius_rho: check.rho_ball.map(|b| b.radius),
            lambda_min: check.report.lambda_min(),
            lambda_max: check.report.lambda_max(),
            contained: check.report.contained,
            contained_rho: check.contained_rho,
            iterations: trace.iterations,
            converged: trace.converged,
        });
    }
    Ok(DemoReport {
        n: layout.n(),
        n_sw: layout.n_sw(),
        unpreconditioned_iterations: plain.iterations,
        unpreconditioned_converged: plain.converged,
        rows,
    })
}

impl DemoReport {
    pub fn all_contained(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.contained && r.contained_rho.unwrap_or(true))
    }

    pub fn row(&self, kind: VariantKind) -> Option<&DemoRow> {
        self.rows.iter().find(|r| r.variant == kind)
    }

    pub fn text(&self) -> String {
        let mut s = format!("layout: n = {}, windows = {}\n", self.n, self.n_sw);
        let _ = writeln!(
            s,
            "unpreconditioned CG: {} iterations (converged {})",
            self.unpreconditioned_iterations,
            flag(self.unpreconditioned_converged)
        );
        for r in &self.rows {
            let _ = writeln!(s, "[{}]", r.variant);
            let _ = writeln!(s, "  rho            {}", opt_real(r.rho));
            let _ = writeln!(s, "  enorm          {}", real(r.e_norm));
            let _ = writeln!(s, "  kappa_d        {}", real(r.kappa_d));
            let _ = writeln!(s, "  radius         {}", real(r.radius));
            let _ = writeln!(s, "  radius_rho     {}", opt_real(r.radius_rho));
            let _ = writeln!(s, "  lambda_min     {}", real(r.lambda_min));
            let _ = writeln!(s, "  lambda_max     {}", real(r.lambda_max));
            let _ = writeln!(s, "  contained      {}", flag(r.contained));
            let _ = writeln!(
                s,
                "  contained_rho  {}",
                r.contained_rho.map_or("NaN", flag)
            );
            let _ = writeln!(
                s,
                "  pcg            {} iterations (converged {})",
                r.iterations,
                flag(r.converged)
            );
        }
        s
    }

    pub fn csv(&self) -> String {
        let mut s = format!("{DEMO_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.variant,
                opt_real(r.rho),
                real(r.e_norm),
                real(r.kappa_d),
                real(r.radius),
                opt_real(r.radius_rho),
                real(r.lambda_min),
                real(r.lambda_max),
                flag(r.contained),
                r.contained_rho.map_or("NaN", flag),
                r.iterations,
                flag(r.converged),
                self.unpreconditioned_iterations,
            );
        }
        s
    }
}

pub fn cmd_fourdvar_demo(path: &Path, opts: &DemoOptions) -> Result<CommandOutput, HarnessError> {
    let layout = read_layout_file(path).map_err(input)?;
    let report = fourdvar_demo(&layout, opts).map_err(|e| match e {
        HarnessError::Input(m) => HarnessError::Input(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(CommandOutput {
        text: report.text(),
        csv: report.csv(),
        violation: (!report.all_contained())
            .then(|| "preconditioned spectrum escapes a containment ball".to_string()),
    })
}

// ---- random-suite ----

pub fn cmd_random_suite(config: SuiteConfig) -> Result<CommandOutput, HarnessError> {
    if config.count < 1 {
        return Err(input("count must be at least 1"));
    }
    if config.max_dim < 2 {
        return Err(input(format!(
            "max dimension must be at least 2, got {}",
            config.max_dim
        )));
    }
    let report = run_suite(config).map_err(|e| HarnessError::Violation(e.to_string()))?;
    let violation = (!report.passed()).then(|| {
        let first = &report.violations[0];
        format!(
            "{} violation(s); reproduce with --seed {} (instance {})",
            report.violations.len(),
            first.seed,
            first.index
        )
    });
    let mut csv = String::from("check,passed,total\n");
    for (check, t) in &report.tallies {
        let _ = writeln!(csv, "{},{},{}", check.name(), t.passed, t.total);
    }
    Ok(CommandOutput {
        text: format!("{report}\n"),
        csv,
        violation,
    })
}
