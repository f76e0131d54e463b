mod args;
mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::{Layer, Settings};
use crate::error::Result;

fn flags(command: &Command) -> Layer {
    match command {
        Command::Transform(a) => Layer::from_flags(Some(&a.dual), None, Some(&a.output), false),
        Command::Ginf(a) => Layer::from_flags(Some(&a.dual), None, Some(&a.output), false),
        Command::Hj(a) => Layer::from_flags(Some(&a.dual), Some(&a.time), Some(&a.output), a.check),
        Command::Interpolate(a) => {
            Layer::from_flags(Some(&a.dual), Some(&a.time), Some(&a.output), false)
        }
        Command::Cauchy(a) => {
            Layer::from_flags(Some(&a.dual), Some(&a.time), Some(&a.output), false)
        }
        Command::Verify(a) => Layer::from_flags(None, None, Some(&a.output), false),
        Command::Info(_) => Layer::default(),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let settings = Settings::resolve(flags(&cli.command), cli.config.as_deref(), |k| {
        std::env::var(k).ok()
    })?;
    log::debug!("{settings:?}");
    match &cli.command {
        Command::Transform(a) => commands::transform(a, &settings),
        Command::Ginf(a) => commands::ginf(a, &settings),
        Command::Hj(a) => commands::hj(a, &settings),
        Command::Interpolate(a) => commands::interpolate(a, &settings),
        Command::Cauchy(a) => commands::cauchy(a, &settings),
        Command::Verify(a) => commands::verify(a, &settings),
        Command::Info(a) => commands::info(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POLARITY_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
