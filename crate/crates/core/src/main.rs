use std::process::ExitCode;

use clap::Parser;
use eikgame::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("eikgame: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
