use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graph_diffusion_cf::commands::{
    build_homo_with, cmd_eval, cmd_print_config, cmd_train, cmd_verify, DEFAULT_VERIFY_INSTANCES,
};
use graph_diffusion_cf::RunConfig;

#[derive(Parser)]
#[command(name = "gdcf", version, about = "Graph-diffusion collaborative filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and write checkpoints plus a metric history.
    Train {
        config: PathBuf,
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
    },
    /// Score a checkpoint and print the report as JSON.
    Eval {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Write the sparsified item-item edge list and weight histogram.
    BuildHomo {
        config: PathBuf,
        #[arg(long, default_value = "runs/homo")]
        out: PathBuf,
    },
    /// Run the numerical identity checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_VERIFY_INSTANCES)]
        instances: usize,
        /// Restrict to one or more checks by name.
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Override every check's tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Print the default configuration.
    PrintConfig,
}

fn run(cli: Cli) -> graph_diffusion_cf::Result<bool> {
    match cli.command {
        Command::Train { config, out } => {
            let summary = cmd_train(&config, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
        }
        Command::Eval { checkpoint, config, cutoff } => {
            let report = cmd_eval(&checkpoint, &config, cutoff)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
        }
        Command::BuildHomo { config, out } => {
            let summary = build_homo_with(&RunConfig::load(&config)?, &out)?;
            if summary.degenerate {
                eprintln!(
                    "warning: s = {}% leaves no item-item edges; the item graph is self-loops only",
                    summary.s_percent
                );
            }
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
        }
        Command::Verify { seed, instances, checks, tolerance } => {
            let report = cmd_verify(seed, instances, &checks, tolerance)?;
            println!("{report}");
            return Ok(report.passed);
        }
        Command::PrintConfig => print!("{}", cmd_print_config()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
