use std::process::ExitCode;

use attrition_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(&cli.command, &mut stdout) {
        Ok(exit) => ExitCode::from(exit.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit.code() as u8)
        }
    }
}
