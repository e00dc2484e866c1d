use std::process::ExitCode;

use clap::Parser;
use ringseg::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(summary) if summary.success() => ExitCode::SUCCESS,
        Ok(summary) => {
            log::error!("{} of {} frames failed", summary.failed, summary.frames);
            ExitCode::FAILURE
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}
