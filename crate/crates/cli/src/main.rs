//! `duelgame` command-line front end.
//!
//! Exit codes: 0 success, 1 failed statistical check or disagreeing
//! analytic routes, 2 configuration or usage error, 3 domain error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use duelgame::Complex64;

#[derive(Debug, Parser)]
#[command(
    name = "duelgame",
    version,
    about = "Ruin time and casualties of a delayed two-player game"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON file with `lambda`, `mu`, `delta_law`, `M` and `N`.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathChoice {
    Both,
    Closed,
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Interval,
    Event,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate Phi(u, v, theta) on the closed-form and operator routes.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Complex numbers are written as `0.3+0.4i`.
        #[arg(long)]
        u: Complex64,
        #[arg(long)]
        v: Complex64,
        #[arg(long)]
        theta: Complex64,
        #[arg(long, value_enum, default_value = "both")]
        path: PathChoice,
    },
    /// Pmf of the terminal casualties of one side, as CSV `k,mass`.
    Pmf {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        side: Side,
        #[arg(long, default_value_t = 100)]
        max_k: usize,
    },
    /// Density of the observed ruin time on a grid, as CSV `t,density`.
    Pdf {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.01)]
        t_step: f64,
    },
    /// Monte Carlo summary as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "interval")]
        mode: ModeArg,
    },
    /// Run the cross-check suite and print a pass/fail table.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        paths: u64,
        /// Paths per mode in the mode-equivalence check; defaults to paths / 10.
        #[arg(long)]
        mode_paths: Option<u64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Eval {
            common,
            u,
            v,
            theta,
            path,
        } => commands::eval(&common, u, v, theta, path),
        Command::Pmf {
            common,
            side,
            max_k,
        } => commands::pmf(&common, side, max_k, &args),
        Command::Pdf {
            common,
            t_max,
            t_step,
        } => commands::pdf(&common, t_max, t_step, &args),
        Command::Simulate {
            common,
            paths,
            seed,
            mode,
        } => commands::simulate(&common, paths, seed, mode),
        Command::Validate {
            common,
            paths,
            mode_paths,
            seed,
        } => commands::validate(
            &common,
            paths,
            mode_paths.unwrap_or((paths / 10).max(1)),
            seed,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
