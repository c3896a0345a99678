//! Command-line front end for `hop-core`: JSON scenario and scheme
//! documents, plus the `solve`, `evaluate`, `export-profile` and `compare`
//! commands of the `hop` binary.

pub mod commands;
pub mod document;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{exit, Outcome};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hop", version, about = "Optimal pump and furnace schemes for heated oil pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the cheapest feasible scheme.
    Solve {
        scenario: PathBuf,
        /// Outer-approximation tolerance on friction, m.
        #[arg(long)]
        eps: Option<f64>,
        /// Relative optimality gap.
        #[arg(long)]
        gap: Option<f64>,
        /// Start every node with an empty cut pool.
        #[arg(long)]
        cold_start: bool,
        #[arg(long)]
        max_nodes: Option<usize>,
        /// Write the scheme document here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one line per branch-and-bound node here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Propagate, check and price a given scheme.
    Evaluate {
        scenario: PathBuf,
        /// Inputs document with `x`, `y`, `dH_sp`, `dT` and `H_out` arrays.
        #[arg(long, conflicts_with = "scheme", required_unless_present = "scheme")]
        inputs: Option<PathBuf>,
        /// Take the inputs from a scheme document.
        #[arg(long)]
        scheme: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write head and temperature along the pipeline as CSV.
    ExportProfile {
        scheme: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the daily cost of two schemes of the same scenario.
    Compare { a: PathBuf, b: PathBuf },
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Solve {
            scenario,
            eps,
            gap,
            cold_start,
            max_nodes,
            out,
            log,
        } => commands::cmd_solve(
            &scenario,
            &commands::SolveArgs {
                eps,
                gap,
                cold_start,
                max_nodes,
                out,
                log,
            },
        ),
        Command::Evaluate {
            scenario,
            inputs,
            scheme,
            out,
        } => {
            let src = match (inputs, scheme) {
                (Some(p), _) => commands::InputsSource::Inputs(p),
                (None, Some(p)) => commands::InputsSource::Scheme(p),
                (None, None) => unreachable!("clap requires one of --inputs and --scheme"),
            };
            commands::cmd_evaluate(&scenario, &src, out.as_deref())
        }
        Command::ExportProfile { scheme, out } => commands::cmd_export_profile(&scheme, out.as_deref()),
        Command::Compare { a, b } => commands::cmd_compare(&a, &b),
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/command-line.md")]
mod book_command_line {}
