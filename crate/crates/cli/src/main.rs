//! `ratio-sparse` command line: solve one instance, run experiment plans,
//! tabulate recovery bounds and generate data.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver did not converge.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ratio-sparse",
    version,
    about = "Sparse recovery by lp/lq ratio minimization"
)]
struct Cli {
    /// Log verbosity; overrides RUST_LOG.
    #[arg(long, global = true, value_enum)]
    log_level: Option<LogLevel>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogLevel {
    Off,
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl From<LogLevel> for log::LevelFilter {
    fn from(l: LogLevel) -> Self {
        match l {
            LogLevel::Off => log::LevelFilter::Off,
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover the sparsest-ratio feasible point of one instance.
    Solve(SolveArgs),
    /// Run a Monte Carlo experiment plan.
    Bench(BenchArgs),
    /// Evaluate recovery thresholds and error bounds over a grid.
    Theory(TheoryArgs),
    /// Write a synthetic instance directory.
    Datagen(DatagenArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance directory (instance.json, A.csv, b.csv).
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// Proximal parameter.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub outer_max: Option<usize>,
    /// JSON solver configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "dlpa")]
    pub solver: String,
    #[arg(long, default_value = "l1-baseline")]
    pub init: String,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Directory for trials.csv, aggregate.json and heatmap.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    /// Matrix spec as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub matrix: String,
    /// Signal spec as inline JSON or a path; `n` defaults to the matrix's.
    #[arg(long)]
    pub signal: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for both matrix and signal; falls back to RATIO_SPARSE_SEED,
    /// then to the seeds in the specs.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn init_logging(level: Option<LogLevel>) {
    let mut builder =
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if let Some(level) = level {
        builder.filter_level(level.into());
    }
    let _ = builder.try_init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.log_level);
    let outcome = match &cli.command {
        Command::Solve(args) => commands::solve(args),
        Command::Bench(args) => commands::bench(args),
        Command::Theory(args) => commands::theory(args),
        Command::Datagen(args) => commands::datagen(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
    }
    msg
}
