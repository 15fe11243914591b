use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_drift::commands::{run, Command, Overrides};
use levy_drift::config::RunConfig;
use levy_drift::error::{exit, CliError};
use levy_drift::exec::Parallel;

/// Drift certification and simulation for Lévy-type generators.
#[derive(Debug, Parser)]
#[command(name = "levy-drift", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    args: Args,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Drift constants, certificate and rate class.
    Constants,
    /// Constants plus a pointwise check of the certified bound.
    Verify,
    /// Monte Carlo skeleton summaries and TV decay.
    Simulate,
    /// Table of the convergence envelope psi(t).
    Rate,
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the JSON report instead of the text report.
    #[arg(long, global = true)]
    json: bool,
    /// Cubature tolerance; overrides `analysis.tol`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of radii; overrides `grid.radii`.
    #[arg(long, global = true)]
    grid_radii: Option<usize>,
    /// Worker threads; `LEVY_DRIFT_THREADS` applies when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn execute(cli: &Cli) -> Result<(i32, String), CliError> {
    let path = cli
        .args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    Overrides {
        out: cli.args.out.clone(),
        seed: cli.args.seed,
        tol: cli.args.tol,
        grid_radii: cli.args.grid_radii,
    }
    .apply(&mut cfg);
    let exec = Parallel::from_flag_or_env(cli.args.threads)?;
    let cmd = match cli.command {
        Cmd::Constants => Command::Constants,
        Cmd::Verify => Command::Verify,
        Cmd::Simulate => Command::Simulate,
        Cmd::Rate => Command::Rate,
    };
    let o = run(cmd, &cfg, &exec)?;
    Ok((o.exit_code, if cli.args.json { o.json } else { o.text }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => exit::USAGE,
            };
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok((code, report)) => {
            let _ = std::io::stdout().write_all(report.as_bytes());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("levy-drift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
