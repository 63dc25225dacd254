use std::process::ExitCode;

use clap::Parser;
use swarmalloc_cli::{execute, write_atomically, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rendered = match execute(&cli, true) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = write_atomically(path, &rendered.body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{}", rendered.body),
    }
    if rendered.exit_code == 1 {
        eprintln!("greedy allocation does not match the exhaustive optimum");
    }
    ExitCode::from(rendered.exit_code)
}
