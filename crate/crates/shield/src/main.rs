use std::process::ExitCode;

use clap::Parser;

use shield::commands::{run, Cli};
use shield::runner::Runner;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Runner::from_env().and_then(|runner| run(cli, &runner));
    match result {
        Ok(manifest) => {
            println!("{} outputs, config {}", manifest.outputs.len(), manifest.config_hash);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
