use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcp_cli::{replay, run_config_file, CliError, ReplayCommand, RunOptions};

#[derive(Parser)]
#[command(name = "rcp", version, about = "Renewal contact process experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides RCP_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions { seed: self.seed, workers: self.workers, out: self.out.clone(), ..RunOptions::from_env() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write `<kind>.csv` and `<kind>.json`.
    Run(Common),
    /// Build one graphical sample, dump it and write baseline CSVs.
    Sample(Common),
    /// Recompute a baseline CSV from a dump.
    Replay {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long, value_enum)]
        command: ReplayCommand,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Run(c) => run_config_file(&c.config, &c.options()).map(|p| vec![p.csv, p.sidecar]),
        Command::Sample(c) => {
            rcp_cli::sample_config_file(&c.config, &c.options()).map(|p| vec![p.dump, p.evolve, p.crossings, p.sidecar])
        }
        Command::Replay { dump, command, out } => replay(&dump, command, &out).map(|p| vec![p]),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rcp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
