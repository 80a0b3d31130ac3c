mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use atomlab::agent::PolicyMode;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "atomlab", version, about = "Train Pong agents and measure where they look")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to the configured one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an agent, measuring score and attention along the way.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from the latest measurement in the output directory.
        #[arg(long)]
        resume: bool,
        /// Stop after the first measurement at or beyond this step.
        #[arg(long)]
        halt_at: Option<u64>,
    },
    /// Compute attention metrics for a checkpoint.
    Atoms {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also emit the full threshold grid.
        #[arg(long)]
        sweep: bool,
    },
    /// Threshold sweep of the combinatorial metric for a checkpoint.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Dual-ball discrimination test for one or more checkpoints.
    Behavior {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
        /// Repeat the test for every displayed score pair (v2 only).
        #[arg(long)]
        score_grid: bool,
        #[arg(long)]
        policy: Option<PolicyMode>,
        /// Also measure attention to pair the relative B1 attention with
        /// the relative interaction.
        #[arg(long)]
        pairing: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { common, resume, halt_at } => commands::train(&common, resume, halt_at),
        Command::Atoms { common, checkpoint, sweep } => commands::atoms(&common, &checkpoint, sweep),
        Command::Sweep { common, checkpoint } => commands::atoms(&common, &checkpoint, true),
        Command::Behavior { common, checkpoint, score_grid, policy, pairing } => {
            commands::behavior(&common, &checkpoint, score_grid, policy, pairing)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<commands::UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
