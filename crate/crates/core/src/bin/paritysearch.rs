use std::process::ExitCode;

use clap::Parser;
use paritysearch::cli::{execute, with_path, Cli, RunConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.command).and_then(|cfg| {
        let text = execute(&cfg)?;
        match &cfg.output {
            Some(path) => std::fs::write(path, text).map_err(with_path(path))?,
            None => print!("{text}"),
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("paritysearch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
