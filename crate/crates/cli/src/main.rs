mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::{resolve, Command, Params};

#[derive(Parser)]
#[command(name = "pxp-scars", version, about = "Semiclassical and exact dynamics of the PXP chain")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run one stage of the pipeline and write its artifacts.
    Run {
        #[arg(value_enum)]
        command: Command,
        /// JSON file with parameters; command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Root under which the per-run directory is created.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[command(flatten)]
        params: Params,
    },
}

fn load_params(path: Option<&PathBuf>) -> Result<Params, CliError> {
    let Some(path) = path else { return Ok(Params::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let Action::Run { command, config, out, params } = Cli::parse().action;
    let result = load_params(config.as_ref())
        .map(|file| file.overlay(params))
        .and_then(|p| resolve(command, p).map_err(CliError::invalid))
        .and_then(|cfg| commands::run(&cfg, &out));
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
