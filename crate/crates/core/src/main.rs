use std::process::ExitCode;

use clap::Parser;
use netprod::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for p in &out.written {
                eprintln!("wrote {}", p.display());
            }
            println!("{}", out.summary);
            if out.violations > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
