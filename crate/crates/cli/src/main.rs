//! `symcoord`: command-line access to the coordinate, operator and
//! diagonal-limit pipelines.

mod commands;
mod inputs;
mod report;

use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use symcoord::diagonal_calculus::DEFAULT_GROUPING_TOLERANCE;
use symcoord::numeric_harness::SEED_ENV;
use symcoord::symmetric_basis::NormalizationTag;

use commands::OutBasis;
use report::{CommandResult, Format};

#[derive(Debug, Parser)]
#[command(name = "symcoord", version, about = "Exact coordinates on symmetric powers and their dual operators")]
struct Cli {
    /// Scaling of the coordinates and, inversely, of their dual operators.
    #[arg(long, global = true, default_value = "paper", value_parser = parse_tag)]
    normalization: NormalizationTag,

    /// Override the command's natural output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for the parallel paths.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// RNG seed; the SYMCOORD_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

fn parse_tag(s: &str) -> std::result::Result<NormalizationTag, String> {
    s.parse().map_err(|e: symcoord::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
#[command(rename_all = "kebab-case")]
enum Command {
    /// Print the coordinate u_r in N variables.
    ExpandU {
        #[arg(long = "N")]
        nvars: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, value_enum, default_value = "x")]
        basis: OutBasis,
    },
    /// Check that D_d u_r is the Kronecker delta for 1 ≤ d, r ≤ N.
    CheckDuality {
        #[arg(long = "N")]
        nvars: usize,
    },
    /// Apply D_d (dual to the d-th coordinate) or D_I to a polynomial.
    #[command(name = "apply-D")]
    ApplyD {
        /// Accepted for symmetry with other commands; must match the file.
        #[arg(long = "N")]
        nvars: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Use the hat normalization for this operator.
        #[arg(long)]
        hat: bool,
        /// 1-based index set I for D_I.
        #[arg(long)]
        subset: Option<String>,
        /// Polynomial file, `-` for stdin.
        #[arg(long, default_value = "-")]
        poly: String,
    },
    /// Coefficients of the diagonal derivative ∂^g in the ∂^σ.
    DiagCombo {
        #[arg(long)]
        g: usize,
    },
    /// Evaluate D_d φ at a point of any coincidence pattern.
    #[command(name = "eval-D")]
    EvalD {
        #[arg(long = "N")]
        nvars: usize,
        #[arg(long)]
        d: usize,
        /// Comma-separated coordinates; integers and n/d stay exact.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Coefficients c0,c1,... of f for φ = Σ f(x_i).
        #[arg(long, allow_hyphen_values = true)]
        trace_poly: Option<String>,
        /// Polynomial file.
        #[arg(long)]
        poly: Option<String>,
        /// trace:c0,c1,..., a basis element like e:[2,1], or a file.
        #[arg(long)]
        phi: Option<String>,
        /// Relative tolerance for grouping floating coordinates.
        #[arg(long, default_value_t = DEFAULT_GROUPING_TOLERANCE)]
        tol: f64,
    },
    /// Compare ∂φ/∂u_d with D_d φ at random distinct points.
    JacobianCheck {
        #[arg(long = "N")]
        nvars: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        phi: Option<String>,
    },
    /// Check a coincident-point formula as a limit of the generic one.
    LimitCheck {
        #[arg(long = "N")]
        nvars: usize,
        /// 1-based indices collapsed onto one value.
        #[arg(long = "J")]
        collapse: String,
        /// 1-based index set of D_I.
        #[arg(long = "I")]
        subset: Option<String>,
        /// Check D_d instead of D_I.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long)]
        phi: Option<String>,
    },
    /// Decay order in N of every ∂^σ u_r, r ≤ rmax.
    DecayTable {
        #[arg(long)]
        rmax: usize,
    },
    /// ∂^σ u_r as a rational function of N.
    DerivativeConstant {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        sigma: String,
    },
    /// Run the acceptance suite.
    Selftest,
}

fn run(cli: Cli) -> Result<CommandResult> {
    let tag = cli.normalization;
    match cli.command {
        Command::ExpandU { nvars, r, basis } => commands::expand_u(nvars, r, basis, tag),
        Command::CheckDuality { nvars } => commands::check_duality_cmd(nvars),
        Command::ApplyD { nvars, d, hat, subset, poly } => {
            let tag = if hat { NormalizationTag::Hat } else { tag };
            commands::apply_d(&poly, nvars, d, subset.as_deref(), tag)
        }
        Command::DiagCombo { g } => commands::diag_combo_cmd(g),
        Command::EvalD { nvars, d, point, trace_poly, poly, phi, tol } => {
            let phi = commands::phi_spec(phi, trace_poly, poly)?;
            commands::eval_d(nvars, d, &point, phi.as_deref(), tol, tag)
        }
        Command::JacobianCheck { nvars, count, phi } => {
            let seed = resolve_seed(cli.seed);
            commands::jacobian_check_cmd(nvars, seed, count, phi.as_deref())
        }
        Command::LimitCheck { nvars, collapse, subset, d, point, phi } => {
            commands::limit_check_cmd(nvars, &collapse, subset.as_deref(), d, point.as_deref(), phi.as_deref())
        }
        Command::DecayTable { rmax } => commands::decay_table_cmd(rmax),
        Command::DerivativeConstant { r, sigma } => commands::derivative_constant_cmd(r, &sigma, tag),
        Command::Selftest => commands::selftest(),
    }
}

/// The environment overrides the flag.
fn resolve_seed(flag: Option<u64>) -> u64 {
    let env = std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok());
    symcoord::numeric_harness::resolve_seed(env.or(flag))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build_global() {
        eprintln!("warning: {e}");
    }
    match run(cli) {
        Ok(result) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(result.render(format).as_bytes());
            for d in &result.diagnostics {
                eprintln!("note: {d}");
            }
            ExitCode::from(result.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
