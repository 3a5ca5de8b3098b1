use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lichlab::orchestrator::{self, config::Format, RunConfig, RunOptions};

/// Config-driven experiments on radial solutions of Lichnerowicz-type equations.
#[derive(Debug, Parser)]
#[command(name = "lichlab", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Sweep worker count (default: logical CPUs).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats, overriding `output.formats`.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("lichlab: {e}");
            return ExitCode::from(orchestrator::exit_code_for(&e) as u8);
        }
    };
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(formats) = cli.format {
        cfg.output.formats = formats;
    }
    match orchestrator::run(&cfg, &RunOptions { jobs: cli.jobs }) {
        Ok(outcome) => {
            if let Some(e) = &outcome.error {
                eprintln!("lichlab: {e}");
            }
            for file in &outcome.files {
                println!("{}", file.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("lichlab: {e}");
            ExitCode::from(orchestrator::exit_code_for(&e) as u8)
        }
    }
}
