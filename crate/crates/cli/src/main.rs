mod args;
mod commands;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::PredictT1(a) => commands::predict_t1(&a),
        Command::SimulateDecay(a) => commands::simulate_decay(&a),
        Command::ExtractQceff(a) => commands::extract_qceff(&a),
        Command::FitEpsilon(a) => commands::fit_epsilon(&a),
        Command::FitFluxNoise(a) => commands::fit_flux_noise(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Report(a) => commands::report(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let message = e.render().to_string();
            let first = message.trim().lines().next().unwrap_or_default();
            return fail(CliError::Usage(first.trim_start_matches("error: ").into()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    let code = e.exit_code();
    let mut stderr = std::io::stderr().lock();
    let _ = writeln!(stderr, "{}", e.to_json());
    ExitCode::from(code)
}
