mod args;
mod commands;
mod report;

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// Exit statuses.
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_SOLVE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// An error carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_INPUT, error: e.into() }
    }

    pub fn solve(e: impl Into<anyhow::Error>) -> Self {
        Self { code: EXIT_SOLVE, error: e.into() }
    }
}

impl From<helmgrid_core::Error> for Failure {
    fn from(e: helmgrid_core::Error) -> Self {
        use helmgrid_core::Error as E;
        let code = match &e {
            E::Parse { .. }
            | E::MalformedRow { .. }
            | E::MissingField(_)
            | E::DuplicateBus(_)
            | E::UnknownBus(_)
            | E::NoSlack
            | E::MultipleSlack(..)
            | E::Disconnected(_)
            | E::ConflictingSetpoint { .. }
            | E::MissingSetpoint(_)
            | E::ZeroImpedance { .. }
            | E::Json(_)
            | E::InvalidArgument(_)
            | E::NotPq(_)
            | E::InvalidDirection(_) => EXIT_INPUT,
            E::Singular(_)
            | E::DefectivePade { .. }
            | E::PoleProximity { .. }
            | E::BaseCaseUnsolvable(_)
            | E::EigenNoConvergence
            | E::ComplexEigenvalue { .. }
            | E::BusEvaluation { .. }
            | E::Bracket(_) => EXIT_SOLVE,
            E::DimensionMismatch { .. } => EXIT_INTERNAL,
        };
        Self { code, error: e.into() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    match catch_unwind(AssertUnwindSafe(|| commands::run(&cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            let _ = writeln!(std::io::stderr(), "helmgrid: {:#}", f.error);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
