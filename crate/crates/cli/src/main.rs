use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use gemmsim_cli::{execute, render, Cli, CliError, Status};

fn run(cli: &Cli) -> Result<Status, CliError> {
    let (doc, status) = execute(cli)?;
    let text = render(&doc, cli.format)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe is not worth an error message.
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed(why)) => {
            eprintln!("gemmsim: verification failed: {why}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("gemmsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
