use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod input;

/// Tight quadratic underestimators of convex functions.
#[derive(Debug, Parser)]
#[command(name = "quadest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute alpha for one function and print the result as JSON.
    Underestimate(UnderestimateArgs),
    /// Run the benchmark corpus and write per-dimension statistics as CSV.
    Bench(BenchArgs),
    /// Write f, its linearization and the underestimator on a grid as CSV.
    Plotdata(PlotArgs),
}

/// Options of a single run.
#[derive(Debug, Clone, Args)]
struct RunArgs {
    /// Convergence tolerance, relative to the scaled function.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long)]
    time_limit_ms: Option<u64>,
}

/// Which function, where.
#[derive(Debug, Clone, Args)]
struct FunctionArgs {
    /// Expression in x0, x1, ...; needs --bounds.
    #[arg(long, conflicts_with = "name", required_unless_present = "name")]
    expr: Option<String>,
    /// Corpus entry, quadratic-like test function or `illustrative`.
    #[arg(long)]
    name: Option<String>,
    /// lo,hi[;lo,hi...]; overrides the bounds of a named function.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Construction point v[,v...]; defaults to the function's usual point
    /// or the box center.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Linear constraints, one `a0 ... b` (a·x + b <= 0) per line.
    #[arg(long)]
    constraints: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UnderestimateArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Line-delimited JSON trace of every iteration.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report zero wall time so output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Per-dimension summary CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-underestimator CSV.
    #[arg(long)]
    details: Option<PathBuf>,
    /// Report zero CPU times so output is reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Grid points per axis.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(commands::EXIT_INVALID);
        }
    };
    let outcome = match cli.command {
        Command::Underestimate(args) => commands::underestimate(&args),
        Command::Bench(args) => commands::bench(&args),
        Command::Plotdata(args) => commands::plotdata(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_INVALID)
        }
    }
}
