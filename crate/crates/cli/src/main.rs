use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use urbanepi::{experiment, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "urbanepi", version, about = "Agent-based SIR epidemics on synthetic urban contact networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Write each replica's contacts as `t,u,v,layer`.
    #[arg(long, global = true)]
    emit_contact_log: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the population and social network only.
    Build,
    /// Run every configured contact model and compute all metrics.
    Run,
    /// Threshold scan over a β grid.
    Scan,
    /// Index-case placement study.
    Place,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.output {
        cfg.output = o.clone();
    }
    cfg.outputs.contact_log |= cli.emit_contact_log;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = load(&cli).and_then(|cfg| match cli.command {
        Command::Build => experiment::build(&cfg),
        Command::Run => experiment::run(&cfg),
        Command::Scan => experiment::scan(&cfg),
        Command::Place => experiment::place(&cfg),
    });
    match outcome {
        Ok(m) => {
            log::info!("done: {} files under {}", m.files.len(), m.config.output.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
