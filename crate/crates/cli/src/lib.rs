//! Scenario-driven driver for the `linesol` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod scenario;

use std::path::PathBuf;

use clap::Parser;

pub use commands::{run_command, Command, Outcome, Overrides};
pub use error::CliError;
pub use scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "linesol", about = "Build, verify and cross-check exact line solutions")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory; defaults to the scenario's output_dir or out/<name>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the command's pass/fail tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Override the finite-difference step of `verify`.
    #[arg(long)]
    pub h: Option<f64>,
}

/// Run one invocation and return the process exit status.
pub fn run(args: &Args) -> i32 {
    let result = Scenario::load(&args.scenario).and_then(|scenario| {
        let overrides = Overrides {
            out: args.out.clone(),
            tol: args.tol,
            h: args.h,
        };
        run_command(args.command, &scenario, &overrides)
    });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
