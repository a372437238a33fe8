use std::error::Error as _;
use std::process::ExitCode;

use clap::Parser;
use codeprobe_cli::cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string();
            eprintln!("error [{}]: {message}", e.stage());
            let mut source = e.source();
            while let Some(s) = source {
                let text = s.to_string();
                // Wrapped errors already show their cause inline.
                if !message.contains(&text) {
                    eprintln!("  caused by: {text}");
                }
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
