use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use airrecomp::harness::{self, ExperimentConfig, ExperimentKind, Overrides};
use airrecomp::Error;
use clap::{Args, Parser, Subcommand};

/// Over-the-air federated learning experiments.
#[derive(Parser)]
#[command(name = "airrecomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregation MSE against the noise level for several M.
    MseSweep(Common),
    /// Retransmission-aware versus retransmission-unaware power control.
    BaselineCompare(Common),
    /// Federated training traces.
    Train(Common),
    /// Budget-aware choice of M from the averaged heuristic.
    SelectM(Common),
    /// Selected M across a grid of noise levels.
    SigmaSweep(Common),
    /// Empirical loss gap against the convergence bounds.
    BoundValidate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full-size data and trial counts.
    #[arg(long)]
    full_scale: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::MseSweep(c) => (ExperimentKind::MseSweep, c),
            Command::BaselineCompare(c) => (ExperimentKind::BaselineCompare, c),
            Command::Train(c) => (ExperimentKind::Train, c),
            Command::SelectM(c) => (ExperimentKind::SelectM, c),
            Command::SigmaSweep(c) => (ExperimentKind::SigmaSweep, c),
            Command::BoundValidate(c) => (ExperimentKind::BoundValidate, c),
        }
    }
}

fn execute(kind: ExperimentKind, args: Common) -> Result<Option<String>, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_toml("")?,
    };
    cfg.set_kind(kind)?;
    cfg.apply_overrides(&Overrides {
        seed: args.seed,
        trials: args.trials,
        output: args.out,
        full_scale: args.full_scale,
    });
    let csv = harness::run(&cfg)?;
    harness::emit(&cfg, &csv)
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, args) {
        Ok(Some(text)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).is_err() {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
