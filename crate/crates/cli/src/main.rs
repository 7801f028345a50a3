//! `gausslattice`: point evaluation, figure tables, refitting, verification
//! and benchmarking for displaced Gaussian lattice sums.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use render::OutputFormat;

#[derive(Debug, Parser)]
#[command(name = "gausslattice", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Write to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Direct,
    Transformed,
}

const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate y_a(s) at one point.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate columns over a linear s grid.
    Grid {
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        step: f64,
        /// Comma-separated subset of s,y0,yhalf,e,efit,diff,diffit.
        #[arg(long, default_value = "s,y0")]
        columns: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Refit the Boltzmann sigmoid to fresh e(s) samples.
    Fit {
        #[arg(long, default_value = "e")]
        target: String,
        #[arg(long, default_value_t = 0.35)]
        from: f64,
        #[arg(long, default_value_t = 0.85)]
        to: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Fit noiseless samples of the published sigmoid and check recovery.
        #[arg(long)]
        self_test: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Run the identity, bound and limit checks.
    Verify {
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Compare truncation indices and timings of both series on a log grid.
    Bench {
        #[arg(long, default_value_t = 0.05)]
        from: f64,
        #[arg(long, default_value_t = 20.0)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
