use std::process::ExitCode;

use clap::Parser;

use sawtooth_cli::args::{Cli, Command};
use sawtooth_cli::config::ExperimentConfig;
use sawtooth_cli::experiments::{run_with_pool, states_table};
use sawtooth_cli::Result;

fn execute(cli: Cli) -> Result<()> {
    if let Command::States { sites } = cli.command {
        print!("{}", states_table(sites)?.to_csv());
        return Ok(());
    }
    let (experiment, common, overrides) = cli.command.plan().expect("experiment subcommand");
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.merge(overrides);
    let resolved = cfg.resolve(experiment)?;
    for path in run_with_pool(&resolved)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
