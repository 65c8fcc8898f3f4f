//! `sutherland`: verification driver for the reduction of the `U(N)`
//! Laplacian to `BC_n` Sutherland models.

mod params;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Report;

pub const THREADS_ENV: &str = "SUTHERLAND_THREADS";

#[derive(Parser, Debug)]
#[command(name = "sutherland", version, about = "Certify the BC_n Sutherland reduction of the U(N) Laplacian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON report to PATH ("-" for stdout).
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Write a CSV table (rows or checks) to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Worker threads (default: $SUTHERLAND_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        kind: Suite,
        #[command(flatten)]
        rep: RepArgs,
        /// Number of random section points.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Override the suite's default tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Oscillator modes for the Fock suite.
        #[arg(long)]
        modes: Option<usize>,
        /// Fock level for the Fock suite.
        #[arg(long)]
        level: Option<u64>,
    },
    /// Chart admissible representations over a parameter grid.
    Enumerate {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Bound on the gammas; sets the default a1 range.
        #[arg(long, default_value_t = 3)]
        gamma_max: u64,
        /// Largest a1 (default: gamma-max times the number of modes).
        #[arg(long)]
        a1_max: Option<u64>,
        /// Each k ranges over -k_max..=k_max.
        #[arg(long, default_value_t = 3)]
        k_max: i64,
        /// Also compute dim V^K by brute force.
        #[arg(long)]
        brute: bool,
        /// Only list admissible rows.
        #[arg(long)]
        admissible_only: bool,
    },
    /// Map representation parameters to Sutherland couplings.
    Couplings {
        #[command(flatten)]
        rep: RepArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Basis,
    Inertia,
    Density,
    Fock,
    Reduction,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    #[value(name = "I")]
    I,
    #[value(name = "II")]
    II,
    #[value(name = "III")]
    III,
}

#[derive(Args, Debug, Clone)]
pub struct RepArgs {
    #[arg(long, value_enum, default_value = "I")]
    pub case: CaseArg,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long)]
    pub gamma: Option<u64>,
    #[arg(long)]
    pub gamma_tilde: Option<u64>,
    #[arg(long)]
    pub gamma_hat: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kl1: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kl2: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kr1: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kr2: Option<i64>,
    /// Symmetric power on the big factor; switches to raw parameters.
    #[arg(long)]
    pub a1: Option<u64>,
}

/// A configuration problem, reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

fn configure_threads(flag: Option<usize>) -> Result<(), UsageError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.parse()
                    .map_err(|_| UsageError(format!("{THREADS_ENV}={v} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(UsageError("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Report, UsageError> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Verify {
            kind,
            rep,
            samples,
            tol,
            seed,
            modes,
            level,
        } => {
            if *samples == 0 {
                return Err(UsageError("--samples must be at least 1".into()));
            }
            if let Some(t) = tol {
                if !(*t > 0.0) {
                    return Err(UsageError("--tol must be positive".into()));
                }
            }
            suites::verify(*kind, rep, *samples, *tol, *seed, *modes, *level)
        }
        Command::Enumerate {
            case,
            n,
            gamma_max,
            a1_max,
            k_max,
            brute,
            admissible_only,
        } => suites::enumerate(*case, *n, *gamma_max, *a1_max, *k_max, *brute, *admissible_only),
        Command::Couplings { rep } => suites::couplings(rep),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = match run(&cli) {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    report.wall_clock_s = start.elapsed().as_secs_f64();
    report.finalize();
    let json_to_stdout = cli.json.as_ref().is_some_and(|p| p.as_os_str() == "-");
    if !json_to_stdout {
        report.print_summary();
    }
    if let Some(p) = &cli.json {
        if let Err(e) = report.write_json(p) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return ExitCode::from(2);
        }
    }
    if let Some(p) = &cli.csv {
        if let Err(e) = report.write_csv(p) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return ExitCode::from(2);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
