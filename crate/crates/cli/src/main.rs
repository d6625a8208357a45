use std::process::ExitCode;

use clap::Parser;
use eivreg_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = eivreg_cli::run(&cli).and_then(|outcome| {
        eivreg_cli::write_output(eivreg_cli::out_path(&cli), &outcome.text)?;
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
