use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surfride_cli::commands::{self, Command, Overrides};
use surfride_core::stochastic::SystemKind;

/// Surf-riding and surge-velocity statistics for ships in following seas.
#[derive(Parser)]
#[command(name = "surfride", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify trajectories in a regular wave at one Froude number.
    Portrait(Common),
    /// Bracket the surf-riding and wave-blocking Froude thresholds.
    Threshold(Common),
    /// Simulate an ensemble at one Froude number.
    Simulate(WithSystem),
    /// Ensemble statistics over the campaign's Froude list.
    Sweep(WithSystem),
    /// Stationary velocity density of the white-noise system.
    Fpk(Common),
    /// Compare the stationary density with white-noise simulations.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Campaign file.
    config: PathBuf,
    /// Output directory, overriding the campaign and SURFRIDE_OUTPUT_ROOT.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// Mean Froude number for single-point commands.
    #[arg(long)]
    froude: Option<f64>,
    /// Ensemble size.
    #[arg(long)]
    paths: Option<usize>,
}

#[derive(Args)]
struct WithSystem {
    #[command(flatten)]
    common: Common,
    /// colored, approx or white.
    #[arg(long)]
    system: Option<SystemKind>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common, system) = match cli.command {
        Cmd::Portrait(c) => (Command::Portrait, c, None),
        Cmd::Threshold(c) => (Command::Threshold, c, None),
        Cmd::Simulate(w) => (Command::Simulate, w.common, w.system),
        Cmd::Sweep(w) => (Command::Sweep, w.common, w.system),
        Cmd::Fpk(c) => (Command::Fpk, c, None),
        Cmd::Compare(c) => (Command::Compare, c, None),
    };
    let ov = Overrides {
        output: common.output,
        threads: common.threads,
        froude: common.froude,
        paths: common.paths,
        system,
    };
    match commands::run(cmd, &common.config, &ov) {
        Ok(dir) => {
            println!("{}: wrote {}", cmd.name(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
