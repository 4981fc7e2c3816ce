use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evschema::pipeline::{self, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "evschema",
    version,
    about = "Liberal event extraction and event-schema induction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate candidate events for every sentence.
    Extract(Common),
    /// Train the encoder, cluster, and write event schemas.
    Induce(Common),
    /// Report silhouette scores over the configured k range.
    Sweep(Common),
    /// Score against gold annotations with k fixed to the gold label counts.
    Eval(Common),
}

#[derive(clap::Args)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `paths.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> evschema::Result<PathBuf> {
    let (Command::Extract(common) | Command::Induce(common) | Command::Sweep(common) | Command::Eval(common)) =
        &cli.command;
    let mut config = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.paths.output_dir = out.clone();
    }
    match cli.command {
        Command::Extract(_) => pipeline::cmd_extract(&config),
        Command::Induce(_) => pipeline::cmd_induce(&config),
        Command::Sweep(_) => pipeline::cmd_sweep(&config),
        Command::Eval(_) => pipeline::cmd_eval(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(pipeline::exit_code(&err) as u8)
        }
    }
}
