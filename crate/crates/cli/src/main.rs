use std::process::ExitCode;

use clap::Parser;
use qrwald_cli::{configure_threads, exit_code, run, Cli, RunSpec};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = std::env::var("QRWALD_THREADS").ok();
    let result = configure_threads(threads.as_deref())
        .and_then(|_| RunSpec::from_command(&cli.command))
        .and_then(|spec| run(&spec));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
