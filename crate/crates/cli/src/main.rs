use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod error;
mod run;

use config::ScenarioConfig;
use error::CliError;

/// Satellite red-shift link and spin weak-value simulator.
#[derive(Debug, Parser)]
#[command(name = "lpisim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Check a config file and list every problem found.
    Validate { config: PathBuf },
    /// Print the spin-gravity constants table.
    Constants,
}

fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_toml(&text).map_err(|e| CliError::ConfigParse {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })
}

fn load_valid(path: &Path) -> Result<ScenarioConfig, CliError> {
    let cfg = load(path)?;
    let violations = cfg.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(CliError::ConfigInvalid(list.join("\n")));
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load_valid(&config)?;
            let out = run::run_scenario(&cfg, &config)?;
            print!("{}", out.summary);
            println!("outputs written to {}", out.dir.display());
        }
        Command::Validate { config } => {
            load_valid(&config)?;
            println!("{}: valid", config.display());
        }
        Command::Constants => print!("{}", run::constants_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
