use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = pcfg_gt::cli::Cli::parse();
    let stdout = std::io::stdout();
    match pcfg_gt::cli::run(&cli, &mut stdout.lock(), &mut std::io::stderr()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", pcfg_gt::cli::error_line(&e));
            ExitCode::FAILURE
        }
    }
}
