use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use phasespace_cli::{run, CliError, ScenarioConfig};

/// Phase-space simulation of Gaussian light and parametric-oscillator states.
#[derive(Parser)]
#[command(name = "phasespace", version, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Scenario JSON with a `command` field instead of subcommand flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario's output path.
    #[arg(long, requires = "config")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<ScenarioConfig>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match (cli.config, cli.command) {
        (Some(path), _) => ScenarioConfig::from_file(&path).map(|mut c| {
            if let Some(out) = cli.out {
                c.set_out(out);
            }
            c
        }),
        (None, Some(command)) => Ok(command),
        (None, None) => Err(CliError::Config("either --config or a subcommand is required".into())),
    };
    match config.and_then(|c| run(&c)) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
