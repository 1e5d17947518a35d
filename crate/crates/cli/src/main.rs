//! `fdkit`: design and analysis front end for full-duplex patch antenna pairs.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 a requested threshold
//! was not met.

mod analyze;
mod budget;
mod common;
mod dgsfit;
mod fig11;
mod layout;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "fdkit", version, about = "Full-duplex antenna isolation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize an inset-fed patch for a design frequency.
    Synth(synth::Args),
    /// Isolation, ECC and CCL of a Touchstone file over a band.
    Analyze(analyze::Args),
    /// Two-slot DGS transmission-line model and its |S21| response.
    #[command(name = "model-fig11")]
    ModelFig11(fig11::Args),
    /// Residual self-interference above the receiver noise floor.
    SiBudget(budget::Args),
    /// Equivalent-circuit values of a DGS band-stop.
    DgsFit(dgsfit::Args),
    /// Build, validate and export staged layouts.
    Layout(layout::Args),
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Synth(a) => synth::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::ModelFig11(a) => fig11::run(a),
        Command::SiBudget(a) => budget::run(a),
        Command::DgsFit(a) => dgsfit::run(a),
        Command::Layout(a) => layout::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ThresholdFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
