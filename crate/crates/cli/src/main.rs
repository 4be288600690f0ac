use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mosg_cli::{exit_for_error, run, Cli, Exit};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(outcome) => {
            let written = match &outcome.out {
                Some(path) => {
                    std::fs::write(path, &outcome.body).map_err(|e| format!("cannot write {}: {e}", path.display()))
                }
                None => std::io::stdout().write_all(outcome.body.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => outcome.exit,
                Err(e) => {
                    eprintln!("error: {e}");
                    Exit::InputError
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_for_error(&e)
        }
    };
    ExitCode::from(code as u8)
}
