use std::path::PathBuf;
use std::process::ExitCode;

use bpt::harness::{run, Command, Invocation};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bpt", version, about = "Train classifiers from unlabeled data with error-picking teachers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectral-radius and ensemble-accuracy sweeps
    Dynamics(Common),
    /// One one-vs-rest classifier trained by the teaching loop
    TrainBinary(Common),
    /// The full one-vs-rest plus pairwise ensemble
    TrainMulti(Common),
    /// Score a saved model on labeled data (needs model=PATH)
    Evaluate(Common),
    /// Learned-teacher quality against reserved pool size
    TeacherSweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file of top-level keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// synth-images | synth-gaussians | cifar10:DIR | cifar100:DIR
    #[arg(long)]
    dataset: Option<String>,
    /// desk | quick | cifar-full
    #[arg(long)]
    profile: Option<String>,
    /// key=value overrides, applied after the config file
    #[arg(value_name = "KEY=VALUE")]
    settings: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Cmd::Dynamics(c) => (Command::Dynamics, c),
        Cmd::TrainBinary(c) => (Command::TrainBinary, c),
        Cmd::TrainMulti(c) => (Command::TrainMulti, c),
        Cmd::Evaluate(c) => (Command::Evaluate, c),
        Cmd::TeacherSweep(c) => (Command::TeacherSweep, c),
    };
    let inv = Invocation {
        command,
        config: c.config,
        seed: c.seed,
        out: c.out,
        workers: c.workers,
        dataset: c.dataset,
        profile: c.profile,
        settings: c.settings,
    };
    match run(&inv) {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bpt {}: {e}", command.name());
            ExitCode::FAILURE
        }
    }
}
