//! `econokin` — experiment harness for the kinetic wealth-exchange models.
//!
//! Usage: `econokin <mode> --config <file> --out <dir> [--seed N]
//! [--replicas K] [--workers P]`, plus `econokin report --manifest <file>`.
//! Exit codes: 0 success, 2 configuration error, 3 numerical-invariant
//! violation, 4 I/O failure. Errors are emitted as one JSON object on
//! stderr.

mod config;
mod error;
mod manifest;
mod report;
mod runner;

use clap::{Args, Parser, Subcommand};
use config::Mode;
use error::{CliError, CliResult};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "econokin",
    version,
    about = "Kinetic wealth-exchange experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's replica count.
    #[arg(long)]
    replicas: Option<usize>,
    /// Worker threads (default: ECONOKIN_WORKERS, then machine parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a run's manifest.json.
    #[arg(long)]
    manifest: PathBuf,
    /// Where to write summary.txt and plot data (default: the manifest's
    /// directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Particle simulation of the market-mediated linear model.
    McLinear(RunArgs),
    /// Particle simulation of the gambling models.
    McGambling(RunArgs),
    /// Particle simulation of the binary trade model.
    McBinary(RunArgs),
    /// Linear Fokker-Planck relaxation in the wealth coordinate.
    FpLinear(RunArgs),
    /// Moment-coupled Fokker-Planck relaxation.
    FpNonlinear(RunArgs),
    /// Fokker-Planck relaxation in the unit-diffusion coordinate.
    FpTransformed(RunArgs),
    /// Small-trade limit study: rescaled particle runs against the
    /// Fokker-Planck solution.
    GrazingStudy(RunArgs),
    /// Randomized log-Sobolev inequality audit.
    LsiAudit(RunArgs),
    /// Tabulate the stationary profiles in both coordinates.
    Steady(RunArgs),
    /// Summarize a finished run from its manifest.
    Report(ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = serde_json::json!({
                "error": {
                    "kind": e.kind(),
                    "exit_code": e.exit_code(),
                    "message": e.message(),
                }
            });
            eprintln!("{doc}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::McLinear(a) => run_mode(Mode::McLinear, a),
        Cmd::McGambling(a) => run_mode(Mode::McGambling, a),
        Cmd::McBinary(a) => run_mode(Mode::McBinary, a),
        Cmd::FpLinear(a) => run_mode(Mode::FpLinear, a),
        Cmd::FpNonlinear(a) => run_mode(Mode::FpNonlinear, a),
        Cmd::FpTransformed(a) => run_mode(Mode::FpTransformed, a),
        Cmd::GrazingStudy(a) => run_mode(Mode::GrazingStudy, a),
        Cmd::LsiAudit(a) => run_mode(Mode::LsiAudit, a),
        Cmd::Steady(a) => run_mode(Mode::Steady, a),
        Cmd::Report(a) => report::report(&report::ReportInputs {
            manifest_path: a.manifest,
            out: a.out,
        }),
    }
}

fn run_mode(mode: Mode, args: RunArgs) -> CliResult<()> {
    let loaded = config::load(&args.config)?;
    if loaded.config.mode != mode {
        return Err(CliError::Config(format!(
            "config selects mode `{}` but the `{}` subcommand was invoked",
            loaded.config.mode.name(),
            mode.name()
        )));
    }
    if let Some(n) = resolve_workers(args.workers)? {
        // Only the first global-pool configuration takes effect; later calls
        // in the same process are no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let params = loaded.config.params.build()?;
    let ctx = runner::RunContext {
        seed: args.seed.unwrap_or(loaded.config.seed),
        replicas: args.replicas.unwrap_or(loaded.config.replicas),
        params,
        hash: loaded.hash,
        out: args.out,
        workers: rayon::current_num_threads(),
        config: loaded.config,
    };
    runner::run(&ctx)
}

fn resolve_workers(flag: Option<usize>) -> CliResult<Option<usize>> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("ECONOKIN_WORKERS") {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!(
                    "ECONOKIN_WORKERS must be a positive integer, got `{s}`"
                ))
            })?),
            Err(_) => None,
        },
    };
    if requested == Some(0) {
        return Err(CliError::Config("workers must be at least 1".to_string()));
    }
    Ok(requested)
}
