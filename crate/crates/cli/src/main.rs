mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Run;
use error::CliError;

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("CHORDSEG_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("CHORDSEG_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn run() -> Result<(), CliError> {
    let (argv, config_file) = config::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit();
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    let thread_cap = thread_cap()?;
    if let Some(n) = thread_cap {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let ctx = Run { config_file: config_file.or(cli.config), thread_cap };
    match &cli.command {
        Command::SynthCorpus(a) => commands::synth_corpus(&ctx, a),
        Command::SplitCorpus(a) => commands::split_corpus(&ctx, a),
        Command::TrainEmbedding(a) => commands::train_embedding_cmd(&ctx, a),
        Command::TrainSegmenter(a) => commands::train_segmenter_cmd(&ctx, a),
        Command::Segment(a) => commands::segment_cmd(&ctx, a, "segment"),
        Command::Baseline(a) if a.method == args::Method::Lstm => {
            Err(CliError::Usage("baseline takes a non-learned method; use `segment --method lstm`".into()))
        }
        Command::Baseline(a) => commands::segment_cmd(&ctx, a, "baseline"),
        Command::Evaluate(a) => commands::evaluate_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) if msg.contains("Usage:") => {
            eprint!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("chordseg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
