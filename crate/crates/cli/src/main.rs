use std::process::exit;

use polymellin_cli::{execute, parse_command, UsageError, EXIT_USAGE};

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match parse_command(&argv) {
        Ok(spec) => exit(execute(&spec)),
        Err(UsageError::Clap(e)) => e.exit(),
        Err(e) => {
            eprintln!("{e}");
            exit(EXIT_USAGE);
        }
    }
}
