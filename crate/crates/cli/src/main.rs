//! `compound`: batch front end for compound-channel analysis, very-noisy
//! studies and random-coding simulation.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 solver did not
//! converge (the report is still written).

mod analyze;
mod common;
mod simulate;
mod vn;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compound_core::io::{render_report, write_report, ReportFormat};
use compound_core::DecoderKind;

use common::{Failure, Outcome};

#[derive(Parser, Debug)]
#[command(name = "compound", version, about = "Compound-channel capacity, decoding rates and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Capacity, worst channels, one-sidedness and per-decoder rates.
    Analyze,
    /// Very-noisy studies.
    Vn {
        #[command(subcommand)]
        study: VnStudy,
    },
    /// Monte Carlo error rates of random codes.
    Simulate(simulate::SimulateArgs),
    /// One-sidedness of every component, the whole set and a greedy cover.
    OneSided,
    /// Compound capacity and its certificate.
    Capacity,
}

#[derive(Subcommand, Debug)]
enum VnStudy {
    /// Closed-form table for the built-in two-component example.
    Counterexample,
    /// Scaled global quantities against their limits over a list of eps.
    Sweep,
    /// Blind decoding rate over the scenario's directions.
    Blind,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario: counterexample, bsc-quarter or union-one-sided.
    #[arg(long, global = true)]
    pub builtin: Option<String>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    /// Capacity solver tolerance in nats.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write information quantities in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Block lengths, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Code rate in bits per channel use.
    #[arg(long, global = true)]
    pub rate: Option<f64>,
    /// Decoders (ml, map, glrt, gmap, mmi), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub decoder: Vec<DecoderKind>,
    /// Values of eps, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Vec<f64>,
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let c = &cli.common;
    match &cli.command {
        Command::Analyze => analyze::analyze(c),
        Command::Capacity => analyze::capacity(c),
        Command::OneSided => analyze::one_sided(c),
        Command::Simulate(args) => simulate::simulate(c, args),
        Command::Vn { study } => match study {
            VnStudy::Counterexample => vn::counterexample(c),
            VnStudy::Sweep => vn::sweep(c),
            VnStudy::Blind => vn::blind(c),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let c = &cli.common;
    match &c.out {
        Some(path) => {
            if let Err(e) = write_report(&outcome.report, path, c.format, c.bits) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        None => print!("{}", render_report(&outcome.report, c.format, c.bits)),
    }
    match outcome.unconverged {
        Some(msg) => {
            eprintln!("error: solver did not converge: {msg}");
            ExitCode::from(3)
        }
        None => ExitCode::SUCCESS,
    }
}
