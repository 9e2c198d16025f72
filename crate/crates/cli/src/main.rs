//! `radkit`: deterministic chest-imaging pipeline driver.
//!
//! Subcommands cover the full loop: synthesize a CT phantom, render
//! radiographs from it, score localization outputs into severity records,
//! aggregate those records into patient profiles, and evaluate detections.
//! Every command is deterministic given its config and seed, and writes only
//! inside its `--out` directory.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;
mod config;
mod data;
mod errors;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Ctx, FileConfig};
use errors::{AppError, AppResult};

#[derive(Debug, Parser)]
#[command(name = "radkit", version, about = "Synthetic chest radiograph pipeline")]
struct Cli {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for stochastic steps (photon noise).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (0 = library default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic CT time series with ground-truth masks.
    Phantom(commands::phantom::PhantomArgs),
    /// Render digitally reconstructed radiographs from a CT volume.
    Drr(commands::drr::DrrArgs),
    /// Score a localization output into a severity record.
    Score(commands::score::ScoreArgs),
    /// Aggregate severity CSVs into per-patient profiles and a summary.
    Monitor(commands::monitor::MonitorArgs),
    /// Evaluate detections or segmentations against ground truth.
    Eval(commands::eval::EvalArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // A panic anywhere below is a bug, not bad input: report it as internal.
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(move || run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure (panic)");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> AppResult<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    let threads = file.value("threads", cli.threads, 0usize)?;
    let ctx = Ctx::new(file, cli.seed, cli.out);

    let body = move || match cli.cmd {
        Command::Phantom(args) => commands::phantom::run(&ctx, args),
        Command::Drr(args) => commands::drr::run(&ctx, args),
        Command::Score(args) => commands::score::run(&ctx, args),
        Command::Monitor(args) => commands::monitor::run(&ctx, args),
        Command::Eval(args) => commands::eval::run(&ctx, args),
    };
    if threads == 0 {
        body()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AppError::internal(format!("thread pool: {e}")))?;
        pool.install(body)
    }
}
