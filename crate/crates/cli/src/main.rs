mod args;
mod commands;
mod settings;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn run(cli: &Cli) -> deft_core::Result<()> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::VerifyLemmas(a) => commands::verify_lemmas_cmd(a),
        Command::FilterResponse(a) => commands::filter_response(a),
        Command::Wavelet(a) => commands::wavelet(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
        Err(e) => {
            let msg = e.kind().as_str().unwrap_or("invalid arguments");
            let detail = e.to_string();
            let first = detail
                .lines()
                .next()
                .unwrap_or(msg)
                .trim_start_matches("error: ");
            eprintln!("ERROR cli: {first}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.module(), e.to_string().replace('\n', " "));
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
