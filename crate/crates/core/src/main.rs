use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wlsq_core::fourdvar::VariantKind;
use wlsq_core::harness::{
    cmd_example_sweep, cmd_figure1, cmd_fourdvar_demo, cmd_random_suite, cmd_verify, CommandOutput,
    DemoOptions, HarnessError, SweepSpec, VariantSelector, FIGURE1_DEFAULT_M,
    FIGURE1_DEFAULT_POINTS,
};
use wlsq_core::krylov::DEFAULT_TOLERANCE;
use wlsq_core::random::DEFAULT_SEED;
use wlsq_core::suite::SuiteConfig;

/// Preconditioners for weighted least-squares from approximate models.
#[derive(Parser, Debug)]
#[command(name = "wlsq", version)]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Relative residual tolerance for PCG.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check spectrum containment for matrices A, Ã and W read from files.
    Verify {
        a: PathBuf,
        a_tilde: PathBuf,
        w: PathBuf,
    },
    /// Sweep the 2x2 example family over a log-spaced alpha grid.
    ExampleSweep {
        #[arg(long, default_value = "both")]
        variant: VariantSelector,
        #[arg(long, default_value_t = 1.0)]
        alpha_min: f64,
        #[arg(long, default_value_t = 1e4)]
        alpha_max: f64,
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Admissible error and error budget over a log-spaced kappa grid.
    Figure1 {
        #[arg(long, default_value_t = 1.0)]
        kappa_min: f64,
        #[arg(long, default_value_t = 1e6)]
        kappa_max: f64,
        #[arg(long, default_value_t = FIGURE1_DEFAULT_POINTS)]
        points: usize,
        /// Target condition numbers, comma separated.
        #[arg(long = "m", value_delimiter = ',', default_values_t = FIGURE1_DEFAULT_M)]
        m_values: Vec<f64>,
    },
    /// Background preconditioner analysis and PCG counts for a layout file.
    FourdvarDemo {
        layout: PathBuf,
        /// Analyse only this approximation (zero, identity, custom).
        #[arg(long)]
        variant: Option<VariantKind>,
        /// Variance of the background block of D.
        #[arg(long, default_value_t = 1.0)]
        b_var: f64,
        /// Variance of the model-error blocks of D.
        #[arg(long, default_value_t = 1.0)]
        q_var: f64,
        /// Adds identity observations with this variance to the solved system.
        #[arg(long)]
        obs_var: Option<f64>,
    },
    /// Randomized invariant suite.
    RandomSuite {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 12)]
        max_dim: usize,
        #[arg(long, hide = true, default_value_t = 1.0)]
        corrupt_radius: f64,
    },
}

fn run(cli: Cli) -> Result<CommandOutput, HarnessError> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(HarnessError::Input(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    match cli.command {
        Command::Verify { a, a_tilde, w } => cmd_verify(&a, &a_tilde, &w),
        Command::ExampleSweep {
            variant,
            alpha_min,
            alpha_max,
            points,
        } => cmd_example_sweep(&SweepSpec {
            lo: alpha_min,
            hi: alpha_max,
            count: points,
            variants: variant,
            output: cli.output.clone(),
            seed: cli.seed,
        }),
        Command::Figure1 {
            kappa_min,
            kappa_max,
            points,
            m_values,
        } => cmd_figure1(kappa_min, kappa_max, points, &m_values),
        Command::FourdvarDemo {
            layout,
            variant,
            b_var,
            q_var,
            obs_var,
        } => cmd_fourdvar_demo(
            &layout,
            &DemoOptions {
                variant,
                background_var: b_var,
                model_var: q_var,
                obs_var,
                tol: cli.tol,
                seed: cli.seed,
            },
        ),
        Command::RandomSuite {
            count,
            max_dim,
            corrupt_radius,
        } => cmd_random_suite(SuiteConfig {
            count,
            max_dim,
            seed: cli.seed,
            radius_scale: corrupt_radius,
        }),
    }
}

fn emit(out: &CommandOutput, path: Option<&Path>) -> std::io::Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(out.text.as_bytes())?;
    match path {
        Some(p) => std::fs::write(p, &out.csv)?,
        None => {
            if !out.text.is_empty() && !out.csv.is_empty() {
                stdout.write_all(b"\n")?;
            }
            stdout.write_all(out.csv.as_bytes())?;
        }
    }
    stdout.flush()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let output = cli.output.clone();
    match run(cli) {
        Ok(out) => {
            if let Err(e) = emit(&out, output.as_deref()) {
                let target = output
                    .as_deref()
                    .map_or("standard output".into(), |p| p.display().to_string());
                eprintln!("error: cannot write {target}: {e}");
                return ExitCode::from(1);
            }
            match out.violation {
                Some(v) => {
                    eprintln!("violation: {v}");
                    ExitCode::from(2)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
