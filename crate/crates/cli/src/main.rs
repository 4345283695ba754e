use clap::{Args, Parser, Subcommand};
use dfgp_cli::commands::{execute, Invocation};
use dfgp_cli::config::Mode;
use std::path::PathBuf;
use std::process::ExitCode;

/// Bandit gradient play in strongly monotone games: run experiments,
/// verify the convergence guarantees, and audit game constants.
#[derive(Parser)]
#[command(name = "dfgp", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single staged run at a fixed radius/horizon or a target accuracy.
    Run(Common),
    /// Restarted run with geometrically shrinking radius.
    Restart(Common),
    /// Statistical verification of the estimator and convergence claims.
    Verify(Common),
    /// One run per target accuracy; reports horizon scaling.
    Sweep(Common),
    /// Audit the game's declared constants against sampled behavior.
    Certify(Common),
}

#[derive(Args)]
struct Common {
    /// Path to the TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's replicate count.
    #[arg(long)]
    replicates: Option<u64>,
    /// Worker threads (default: DFGP_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: the config's [output] dir, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the pre-run audit of the declared game constants.
    #[arg(long)]
    skip_certify: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Run(c) => (Mode::Run, c),
        Command::Restart(c) => (Mode::Restart, c),
        Command::Verify(c) => (Mode::Verify, c),
        Command::Sweep(c) => (Mode::Sweep, c),
        Command::Certify(c) => (Mode::Certify, c),
    };
    let code = execute(&Invocation {
        mode,
        config: common.config,
        seed: common.seed,
        replicates: common.replicates,
        workers: common.workers,
        out: common.out,
        skip_certify: common.skip_certify,
    });
    ExitCode::from(code as u8)
}
