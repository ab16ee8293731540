use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use ocl_cli::commands::{cmd_compat, cmd_picard, cmd_run, cmd_sweep, cmd_verify, Options};

/// Penalized obstacle-mass solver and verification harness.
///
/// Exit status: 0 when every check passes, 2 when a check fails, 1 on error.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Worker threads for concurrent sweeps and checks; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Leave the wall-clock out of manifests and reject settings that would
    /// record one.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "OCL_OUT_DIR", default_value = "ocl-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One penalized run, persisted with its checks.
    Run(Io),
    /// The (n, eps, dx) ladder of the [sweep] section.
    Sweep(Io),
    /// Repeat the checks of a run directory from its files.
    Verify { run_dir: PathBuf },
    /// Classify the datum/obstacle pair.
    Compat(Io),
    /// Measure the contraction of the fixed-point map.
    Picard(Io),
}

fn dispatch(cli: Cli) -> Result<bool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()?;
    let opts = Options {
        seedless: cli.seedless,
    };
    match cli.command {
        Command::Run(io) => cmd_run(&io.config, &io.out, opts),
        Command::Sweep(io) => cmd_sweep(&io.config, &io.out, opts),
        Command::Verify { run_dir } => cmd_verify(&run_dir),
        Command::Compat(io) => cmd_compat(&io.config, &io.out, opts),
        Command::Picard(io) => cmd_picard(&io.config, &io.out, opts),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
