use std::io::IsTerminal;

use clap::Parser;
use graspbo_cli::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_max_level(cli.log_level.filter())
        .with_writer(std::io::stderr)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    if let Err(e) = run(&cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
