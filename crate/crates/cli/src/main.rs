mod args;
mod commands;
mod io;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, IsoCommand, StdIsoCommand, VerifyCommand};
use report::{Inputs, Outcome, Report};

const EXIT_INVALID: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_UNSUPPORTED: u8 = 3;

fn dispatch(command: &Command, inputs: &mut Inputs) -> Result<Outcome> {
    match command {
        Command::Iso(IsoCommand::Forward(a)) => commands::iso_forward(a, inputs),
        Command::Iso(IsoCommand::Reverse(a)) => commands::iso_reverse(a, inputs),
        Command::StdIso(StdIsoCommand::Forward(a)) => commands::std_forward(a, inputs),
        Command::StdIso(StdIsoCommand::Reverse(a)) => commands::std_reverse(a, inputs),
        Command::Verify(VerifyCommand::Roundtrip(a)) => commands::roundtrip(a, inputs),
        Command::Verify(VerifyCommand::Equivalence(a)) => commands::equivalence(a, inputs),
        Command::Verify(VerifyCommand::TraceCommute(a)) => commands::trace_commute(a, inputs),
        Command::Verify(VerifyCommand::MeasureCommute(a)) => commands::measure_commute(a, inputs),
        Command::Verify(VerifyCommand::PovmEnsemble(a)) => commands::povm_ensemble(a, inputs),
        Command::FixedPoints(a) => commands::fixed_points(a, inputs),
        Command::Decompose(a) => commands::decompose(a, inputs),
        Command::BroadcastDemo(a) => commands::broadcast_demo(a, inputs),
        Command::MonogamyDemo(a) => commands::monogamy(a, inputs),
        Command::CloningDemo(a) => commands::cloning(a, inputs),
        Command::UniversalDemo(a) => commands::universal(a, inputs),
        Command::Sample(a) => commands::sample_table(a, inputs),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Iso(IsoCommand::Forward(_)) => "iso forward",
        Command::Iso(IsoCommand::Reverse(_)) => "iso reverse",
        Command::StdIso(StdIsoCommand::Forward(_)) => "std-iso forward",
        Command::StdIso(StdIsoCommand::Reverse(_)) => "std-iso reverse",
        Command::Verify(VerifyCommand::Roundtrip(_)) => "verify roundtrip",
        Command::Verify(VerifyCommand::Equivalence(_)) => "verify equivalence",
        Command::Verify(VerifyCommand::TraceCommute(_)) => "verify trace-commute",
        Command::Verify(VerifyCommand::MeasureCommute(_)) => "verify measure-commute",
        Command::Verify(VerifyCommand::PovmEnsemble(_)) => "verify povm-ensemble",
        Command::FixedPoints(_) => "fixed-points",
        Command::Decompose(_) => "decompose",
        Command::BroadcastDemo(_) => "broadcast-demo",
        Command::MonogamyDemo(_) => "monogamy-demo",
        Command::CloningDemo(_) => "cloning-demo",
        Command::UniversalDemo(_) => "universal-demo",
        Command::Sample(_) => "sample",
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<qcond_core::Error>());
    match core {
        Some(qcond_core::Error::Unsupported(_)) => EXIT_UNSUPPORTED,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INVALID),
            };
        }
    };
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t >= 0.0) {
            eprintln!("error: --tol must be a finite nonnegative number");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let started = Instant::now();
    let name = command_name(&cli.command);
    let mut inputs = Inputs::new(name);
    match dispatch(&cli.command, &mut inputs) {
        Ok(outcome) => {
            let report = Report::finish(name.to_string(), inputs, outcome, cli.tol, started);
            match serde_json::to_string_pretty(&report) {
                Ok(text) => {
                    let _ = writeln!(std::io::stdout().lock(), "{text}");
                }
                Err(e) => {
                    eprintln!("error: cannot serialize report: {e}");
                    return ExitCode::from(EXIT_INVALID);
                }
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
