//! Command-line front end.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

pub use args::Cli;

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(cli.global.log_level()))
        .format_timestamp(None)
        .init();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let causes: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            let report = serde_json::json!({ "error": e.to_string(), "causes": causes });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
