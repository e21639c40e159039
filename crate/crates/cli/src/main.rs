use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod failure;
mod table;

use failure::Failure;

/// Z-stability of torus actions on products of projective spaces.
///
/// Exit codes: 0 success, 1 unstable under --strict, 2 parse error,
/// 3 precondition violated, 4 disagreement, 5 numeric failure.
#[derive(Parser)]
#[command(name = "zstab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a scenario under a named charge; prints the verdict as JSON.
    Classify {
        scenario: PathBuf,
        #[arg(long)]
        charge: String,
        /// Cross-check against the brute-force oracle over [-B, B]^rank.
        #[arg(long)]
        oracle_bound: Option<i64>,
        /// Accept negative r_k, classifying through the oracle.
        #[arg(long)]
        allow_mixed: bool,
        /// Exit with status 1 when the verdict is Unstable.
        #[arg(long)]
        strict: bool,
    },
    /// Newton solve for a critical point starting from sigma = 0.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        charge: String,
        #[arg(long, default_value_t = zstab::moment::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Write the iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Integrate the gradient flow from sigma = 0; CSV trace to stdout.
    Flow {
        scenario: PathBuf,
        #[arg(long)]
        charge: String,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = zstab::moment::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal destabilising direction of an unstable scenario.
    Destabilise {
        scenario: PathBuf,
        #[arg(long)]
        charge: String,
    },
    /// Energy, gradient and Hessian at a group direction.
    Energy {
        scenario: PathBuf,
        #[arg(long)]
        charge: String,
        /// Comma-separated coordinates, e.g. "0.5,-1".
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
    },
    /// Components of Grad(BG) in a box and the dimension of its charges.
    GradBg {
        /// gl:N, sl:N or torus:R.
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 2)]
        bound: i64,
    },
    /// Check a tabulated charge for additivity and Weyl invariance.
    ValidateCharge { table: PathBuf },
    /// Seeded agreement run between classification and the solver.
    VerifyKn {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        /// Worker threads; overrides ZSTAB_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = zstab::moment::DEFAULT_TOL)]
        tol: f64,
    },
    /// Classify along the segment between two charges of a scenario.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        steps: usize,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Classify { scenario, charge, oracle_bound, allow_mixed, strict } => {
            commands::classify(&scenario, &charge, oracle_bound, allow_mixed, strict)
        }
        Command::Solve { scenario, charge, tol, max_iter, trace } => {
            commands::solve(&scenario, &charge, tol, max_iter, trace.as_deref())
        }
        Command::Flow { scenario, charge, t_end, tol, out } => {
            commands::flow(&scenario, &charge, t_end, tol, out.as_deref())
        }
        Command::Destabilise { scenario, charge } => commands::destabilise(&scenario, &charge),
        Command::Energy { scenario, charge, sigma } => commands::energy(&scenario, &charge, &sigma),
        Command::GradBg { group, bound } => commands::grad_bg(&group, bound),
        Command::ValidateCharge { table } => commands::validate_charge(&table),
        Command::VerifyKn { seed, count, threads, tol } => commands::verify_kn(seed, count, threads, tol),
        Command::Sweep { scenario, from, to, steps } => commands::sweep(&scenario, &from, &to, steps),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !matches!(f, Failure::Unstable | Failure::Disagreement(_)) {
                eprintln!("error: {f}");
            }
            ExitCode::from(f.code())
        }
    }
}
