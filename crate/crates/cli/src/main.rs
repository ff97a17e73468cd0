//! `tvbound`: bounds, statistical-dimension estimates, recovery and
//! phase-transition experiments for 1-D total-variation minimization.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tvbound", version, about)]
struct Cli {
    /// Worker threads for parallel stages; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form bounds for one (n, s), or a CSV sweep over all s.
    Bound(BoundArgs),
    /// Monte Carlo estimate of the expected squared distance curve.
    Statdim(StatdimArgs),
    /// Sign correlations of difference-operator rows, one per gap.
    LemmaCheck(LemmaArgs),
    /// Solve one recovery instance read from CSV files.
    Solve(SolveArgs),
    /// Phase-transition grid over (s, m) with a bound overlay.
    Phase(PhaseArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// key=value file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; a `.meta` file with the resolved settings is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
}

#[derive(Debug, Args)]
struct StatdimArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    /// Support size; an equispaced support with +1 signs is used unless `--support` is given.
    #[arg(long)]
    s: Option<usize>,
    /// Explicit support rows (comma list, zero-based).
    #[arg(long)]
    support: Option<String>,
    /// Signs on the support (comma list of +1/-1); defaults to all +1.
    #[arg(long)]
    signs: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list or `start:step:end`; default is a geometric grid with refinement.
    #[arg(long)]
    t_grid: Option<String>,
}

#[derive(Debug, Args)]
struct LemmaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// CSV with m rows of n values.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// CSV with one value per line.
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// Noise radius; 0 solves the equality-constrained program.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    /// Row values (`start:step:end` or comma list).
    #[arg(long)]
    s_values: Option<String>,
    /// Column values (`start:step:end` or comma list).
    #[arg(long)]
    m_values: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Success when `||x - x_hat|| <= threshold`.
    #[arg(long)]
    threshold: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let result = match cli.command {
        Command::Bound(a) => commands::bound(a),
        Command::Statdim(a) => commands::statdim(a),
        Command::LemmaCheck(a) => commands::lemma_check(a),
        Command::Solve(a) => commands::solve(a),
        Command::Phase(a) => commands::phase(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
