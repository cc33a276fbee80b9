// SPDX-License-Identifier: MIT OR Apache-2.0

//! `attrgraph` command-line front end.
//!
//! [`dispatch`] parses arguments, applies the optional config file and runs
//! one subcommand. Exit codes: 0 success, 1 usage error, 2 data or validation
//! error, 3 numerical failure.

mod analysis;
mod args;
pub mod config;
mod detect;
pub mod error;
mod intervene;

use std::ffi::OsString;
use std::path::Path;

use attrgraph_core::report::{Report, ReportHeader};
use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::Settings;
use crate::error::{CliError, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ATTRGRAPH_THREADS";

/// Runs one invocation and returns its exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{raw}`")))?;
    // a second in-process call keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let mut settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Validate(a) => analysis::validate(a, &mut settings),
        Command::Metrics(a) => analysis::metrics(a, &mut settings),
        Command::Profile(a) => analysis::profile(a, &mut settings),
        Command::Routing(a) => analysis::routing(a, &mut settings),
        Command::Generate(a) => analysis::generate(a, &mut settings),
        Command::Split(a) => detect::split(a, &mut settings),
        Command::Train(a) => detect::train(a, &mut settings),
        Command::Eval(a) => detect::eval(a, &mut settings),
        Command::Intervene(a) => intervene::intervene(a, &mut settings),
    }
}

/// Header for a report built from the settings resolved so far.
pub(crate) fn header(subcommand: &str, seed: Option<u64>, settings: &Settings) -> Result<ReportHeader> {
    Ok(ReportHeader::new(subcommand, seed, settings.finish()?))
}

/// Writes a report to `out`, or to stdout when no path is given.
pub(crate) fn emit(report: &Report, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => report.write(path)?,
        None => print!("{}", report.render()?),
    }
    Ok(())
}

pub(crate) fn fmt_f64(x: f64) -> String {
    x.to_string()
}
