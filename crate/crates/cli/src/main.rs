//! `editpath` command-line tool.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use editpath::Error;

use crate::config::UsageError;

#[derive(Parser)]
#[command(name = "editpath", version, about = "Graph edit distance with learnable costs")]
struct Cli {
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON object of settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a TUDataset directory into a JSON dataset with a 7:1:2 split.
    Ingest(commands::IngestArgs),
    /// Generate a lollipop dataset labelled by head size.
    GenLollipop(commands::GenLollipopArgs),
    /// Train the learned cost model with the triplet loss.
    Train(commands::TrainArgs),
    /// Graph edit distance between two graphs of a dataset.
    Ged(commands::GedArgs),
    /// Sample interpolated graphs along edit paths between training graphs.
    Augment(commands::AugmentArgs),
    /// Nearest-neighbour accuracy and cost diagnostics.
    Eval(commands::EvalArgs),
    /// Flip a proportion of training labels.
    Corrupt(commands::CorruptArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(config::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let file = cli.config.as_deref().map(config::read_config_file).transpose()?;
    let file = file.as_ref();
    match cli.command {
        Command::Ingest(a) => commands::ingest(file, a),
        Command::GenLollipop(a) => commands::gen_lollipop(file, a),
        Command::Train(a) => commands::train(file, a),
        Command::Ged(a) => commands::ged(file, a),
        Command::Augment(a) => commands::augment(file, a),
        Command::Eval(a) => commands::eval(file, a),
        Command::Corrupt(a) => commands::corrupt(file, a),
    }
}

/// 2 for bad input (flags, configuration, dataset files), 1 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|cause| {
        cause.is::<UsageError>()
            || matches!(
                cause.downcast_ref::<Error>(),
                Some(
                    Error::InvalidArgument(_)
                        | Error::InvalidDataset(_)
                        | Error::InvalidGraph(_)
                        | Error::MissingFile(_)
                        | Error::Parse { .. }
                        | Error::Schema { .. }
                        | Error::DimensionMismatch(_)
                        | Error::IndexOutOfRange { .. }
                )
            )
    });
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
