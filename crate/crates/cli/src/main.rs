//! `zerorate`: command-line driver for the sponsored-data market model.
//!
//! Exit codes: 0 success, 2 configuration error, 3 assumption, precondition
//! or queue-stability failure, 4 numerical failure, 1 I/O error.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zerorate::{Error, ExogenousMode};

use crate::commands::Report;
use crate::config::{Overrides, Scenario};

#[derive(Parser, Debug)]
#[command(
    name = "zerorate",
    version,
    about = "Equilibria, sponsorship games and revenue gains in a zero-rating market"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML). Defaults to the built-in two-CP reference market.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// CSV destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write a plot next to `--out`, with an `.svg` extension.
    #[arg(long, global = true, requires = "out")]
    svg: bool,

    /// Simulation seed, overriding the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Exogenous traffic mode: noncongesting or congesting.
    #[arg(long, global = true)]
    mode: Option<ExogenousMode>,

    /// Sweep points, or the strategy grid size for best-response.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    grid: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check the modelling assumptions of the scenario's market.
    Validate,
    /// Wardrop split for the scenario's sponsorship profile.
    Equilibrium,
    /// Mean delay against the access price.
    DelaySweep,
    /// Best-response curves of the continuous sponsorship game.
    BestResponse,
    /// Equilibria of the sponsor/no-sponsor game and the ISP revenue gain.
    PneRgf,
    /// Equilibria and revenue gains with two competing ISPs.
    MultiIsp,
    /// Simulate the CP queues and compare with the analytic delays.
    Simulate,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) => 2,
        Error::AssumptionViolation(_)
        | Error::PreconditionViolation(_)
        | Error::UnstableQueue { .. } => 3,
        Error::NoConvergence(_) => 4,
        Error::AtPoint { .. } => unreachable!("root strips point tags"),
    }
}

fn run_command(command: Command, scenario: &Scenario) -> zerorate::Result<Report> {
    match command {
        Command::Validate => commands::validate(scenario),
        Command::Equilibrium => commands::equilibrium(scenario),
        Command::DelaySweep => commands::delay_sweep(scenario),
        Command::BestResponse => commands::best_response(scenario),
        Command::PneRgf => commands::pne_rgf(scenario),
        Command::MultiIsp => commands::multi_isp(scenario),
        Command::Simulate => commands::simulate(scenario),
    }
}

fn write_outputs(report: &Report, out: Option<&Path>, svg: bool) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.table.write_csv(&mut w).map_err(io::Error::other)?;
            w.flush()?;
            if svg {
                match &report.plot {
                    Some(plot) => std::fs::write(path.with_extension("svg"), plot.to_svg())?,
                    None => eprintln!("note: this command has no plot"),
                }
            }
        }
        None => report
            .table
            .write_csv(io::stdout().lock())
            .map_err(io::Error::other)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        mode: cli.mode,
        grid: cli.grid.map(|g| g as usize),
    };
    let result = Scenario::load(cli.config.as_deref()).and_then(|mut scenario| {
        scenario.apply(&overrides);
        run_command(cli.command, &scenario)
    });
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = write_outputs(&report, cli.out.as_deref(), cli.svg) {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(1);
    }
    for note in &report.notes {
        eprintln!("{note}");
    }
    match &report.failure {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e))
        }
        None => ExitCode::SUCCESS,
    }
}
