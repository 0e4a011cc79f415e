use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pbacc::experiment::{
    cmd_leakage, cmd_matmul, cmd_run, exit_code, ExperimentConfig, Outcome, RunOptions,
};

/// Privacy-aware Berrut coded computing experiments.
#[derive(Parser)]
#[command(name = "pbacc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Protocol precision sweep (BSS, PBSS, BSS+DP) over functions and stragglers.
    Run(Common),
    /// Leakage bound curves over the number of colluding nodes.
    Leakage(Common),
    /// Coded matrix product sweep (direct and blocked layouts).
    Matmul(Common),
    /// Print the default configuration.
    DefaultConfig,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults to the reference operating point.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV and SVG files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Maximum number of concurrent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG charts.
    #[arg(long)]
    plot: bool,
}

fn execute(
    common: &Common,
    cmd: fn(&ExperimentConfig, &RunOptions) -> pbacc::Result<Outcome>,
) -> pbacc::Result<Outcome> {
    let config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let opts = RunOptions {
        out_dir: common.out.clone(),
        jobs: common.jobs,
        seed: common.seed,
        plot: common.plot,
    };
    cmd(&config, &opts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => execute(c, cmd_run),
        Command::Leakage(c) => execute(c, cmd_leakage),
        Command::Matmul(c) => execute(c, cmd_matmul),
        Command::DefaultConfig => {
            println!("{}", ExperimentConfig::default().to_json());
            return ExitCode::SUCCESS;
        }
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            println!("wrote {}", outcome.csv.display());
            for p in &outcome.plots {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
