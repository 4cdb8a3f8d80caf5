//! `harris`: certify drift, minorization and contraction of finite Markov
//! kernels, and solve for their invariant measure with a certified error.
//!
//! Exit codes: 0 when every stage is certified, 2 when the input is sound
//! but no certificate exists (no feasible constants, no minorization, `S`
//! unreachable, or a failed stage), 1 for input and parameter errors.

mod input;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harris_core::alt::{certify_averaged, check_alt, default_pipeline_r, reach_depth};
use harris_core::certify::{certify, certify_fixed, Certification, FixedConstants};
use harris_core::examples;
use harris_core::io::kernel_to_json;
use harris_core::solve::{convergence_curve, invariant_measure};
use harris_core::HarrisError;

use input::{load, load_mu0, parse_indices, Loaded};
use report::{Advisory, ConvergenceSummary, HarrisReport};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(HarrisError),
}

impl From<HarrisError> for CliError {
    fn from(e: HarrisError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(
                HarrisError::NoFeasiblePoint | HarrisError::NoMinorization | HarrisError::Unreachable { .. },
            ) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "harris", version, about = "Certified Harris-theorem constants for finite Markov kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify drift, minorization and ρ_β contraction of a kernel.
    Certify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        constants: ConstantArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certify, then iterate to the invariant measure with a certified error.
    Invariant {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        constants: ConstantArgs,
        /// Target certified ρ_β error.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Starting measure: "uniform", "delta:<i>", a vector file or inline list.
        #[arg(long)]
        mu0: Option<String>,
        /// Write the convergence curve (n, rho_beta_to_mustar, certified_bound) as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check localized drift on S and certify the averaged operator.
    Alt {
        #[command(flatten)]
        input: InputArgs,
        /// Indices of the small set S, comma separated.
        #[arg(long)]
        s: String,
        #[arg(long = "gamma-tilde")]
        gamma_tilde: f64,
        #[arg(long)]
        b: f64,
        /// Level-set threshold for the averaged operator (default 1.05·2b/(1−γ̃)).
        #[arg(long)]
        r: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List the built-in examples, or print one as a JSON kernel file.
    Demo {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Kernel file (CSV or JSON) or `demo:<name>`.
    kernel: String,
    /// Lyapunov weight V: a file, or inline values such as `1,2`.
    #[arg(long)]
    v: Option<String>,
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

impl ConstantArgs {
    fn fixed(&self) -> FixedConstants {
        FixedConstants {
            gamma: self.gamma,
            k: self.k,
            r: self.r,
            alpha0: self.alpha0,
            beta: self.beta,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Pretty,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("harris: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HARRIS_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Input(format!("HARRIS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot configure thread pool: {e}")))
}

/// Runs one command; `Ok(false)` means a report was written but some stage failed.
fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Certify { input, constants, output } => {
            let loaded = load(&input.kernel, input.v.as_deref())?;
            let mut report = HarrisReport::new("certify", &loaded);
            report.record_certification("", certification(&loaded, &constants)?);
            emit(&report, &output)
        }
        Command::Invariant {
            input,
            constants,
            tol,
            mu0,
            curve,
            output,
        } => {
            let loaded = load(&input.kernel, input.v.as_deref())?;
            let mu0 = load_mu0(mu0.as_deref(), loaded.kernel.n())?;
            if !(tol.is_finite() && tol > 0.0) {
                return Err(HarrisError::Param(format!("tol = {tol} must be finite and > 0")).into());
            }
            let mut report = HarrisReport::new("invariant", &loaded);
            let cert = certification(&loaded, &constants)?;
            let contraction = cert.contraction.clone();
            report.record_certification("", cert);
            if !report.passed() {
                return emit(&report, &output);
            }
            let run = invariant_measure(&loaded.kernel, &loaded.v, &contraction, tol, &mu0)?;
            report.verdict("invariant", run.certified_error <= tol);
            report.convergence = Some(ConvergenceSummary::new(&run, tol));
            if let Some(path) = curve {
                let rows = convergence_curve(&loaded.kernel, &loaded.v, contraction.beta_scale(), &mu0, run.iterates)?;
                let allowance = rounding_allowance(&loaded, contraction.beta);
                let mut csv = String::from("n,rho_beta_to_mustar,certified_bound\n");
                for (n, dist) in rows {
                    let bound = if n == 0 {
                        run.distances[0] / (1.0 - run.alpha_bar)
                    } else {
                        run.bounds[n - 1]
                    };
                    csv.push_str(&format!("{n},{dist:e},{:e}\n", bound + allowance));
                }
                write_file(&path, &csv)?;
            }
            emit(&report, &output)
        }
        Command::Alt {
            input,
            s,
            gamma_tilde,
            b,
            r,
            output,
        } => {
            let loaded = load(&input.kernel, input.v.as_deref())?;
            let s = parse_indices(&s)?;
            let mut report = HarrisReport::new("alt", &loaded);
            let cert = check_alt(&loaded.kernel, &loaded.v, &s, gamma_tilde, b)?;
            report.verdict("localized", cert.valid);
            if !cert.valid {
                // Name the structural reason when S cannot be reached at all.
                reach_depth(&loaded.kernel, &cert.nu_tilde, &cert.s)?;
                report.alt = Some(cert);
                return emit(&report, &output);
            }
            let r = r.unwrap_or_else(|| default_pipeline_r(&cert));
            let averaged = certify_averaged(&loaded.kernel, &loaded.v, &cert, r)?;
            report.record_certification("averaged-", averaged.certification.clone());
            report.advisory = Some(Advisory {
                remark_bound: averaged.averaging.remark_bound,
                note: "heuristic depth, not used for N; may be negative".into(),
            });
            report.alt = Some(cert);
            report.averaged = Some(averaged);
            emit(&report, &output)
        }
        Command::Demo { name, out } => {
            let Some(name) = name else {
                println!("{}", examples::NAMES.join("\n"));
                return Ok(true);
            };
            let ex = examples::by_name(&name).ok_or_else(|| {
                CliError::Input(format!("unknown demo {name:?}; available: {}", examples::NAMES.join(", ")))
            })?;
            let mut json = kernel_to_json(&ex.kernel, Some(&ex.v), None);
            json.push('\n');
            match out {
                Some(path) => write_file(&path, &json)?,
                None => print!("{json}"),
            }
            Ok(true)
        }
    }
}

fn certification(loaded: &Loaded, constants: &ConstantArgs) -> Result<Certification, CliError> {
    let fixed = constants.fixed();
    let cert = if fixed.is_empty() {
        certify(&loaded.kernel, &loaded.v)?
    } else {
        certify_fixed(&loaded.kernel, &loaded.v, &fixed)?
    };
    Ok(cert)
}

/// Floating-point slack added to curve bounds: the a-priori bound holds for
/// exact arithmetic, while the distances are computed in `f64` against a
/// directly solved `μ⋆`, so near-stationary rows differ by rounding only.
fn rounding_allowance(loaded: &Loaded, beta: f64) -> f64 {
    let widest = 1.0 + beta * loaded.v.max();
    16.0 * loaded.kernel.n() as f64 * f64::EPSILON * widest
}

fn emit(report: &HarrisReport, output: &OutputArgs) -> Result<bool, CliError> {
    let text = match output.format {
        Format::Json => report.to_json(),
        Format::Pretty => report.to_pretty(),
    };
    match &output.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(report.passed())
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
