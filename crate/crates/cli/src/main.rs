//! `regfrac`: command-line front end of the regional fractional Laplacian
//! workbench.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 numerical failure.
//!
//! Outputs are deterministic: the library is sequential and uses IEEE-754
//! double precision with the default round-to-nearest mode, so identical
//! configurations produce byte-identical files on one platform.

mod checks;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunConfig, Setup};

#[derive(Parser)]
#[command(name = "regfrac", version, about = "Regional fractional Laplacian workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (.toml or .json; a previous report.json works too).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Accepted for interface stability; computations are
    /// sequential.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fail on principal values whose extrapolation does not settle.
    #[arg(long, global = true)]
    strict: bool,
    /// Seed for randomized check panels (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the configured Dirichlet problem.
    Solve,
    /// Evaluate the principal-value operator and the tail `phi` at points.
    OperatorEval,
    /// Run the named diagnostics.
    Verify,
    /// Tabulate the discrete Green kernel against its two-sided bound.
    Green,
    /// Fit the boundary decay exponent of a solution.
    FitDecay,
}

pub enum Failure {
    Usage(anyhow::Error),
    Verification(String),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

/// Attributes an error to the stage in which it happened.
pub trait Stage<T> {
    fn usage(self) -> Result<T, Failure>;
    fn numerical(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn numerical(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Numerical(e.into()))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).usage()?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    let setup = Setup::new(&cfg).usage()?;
    let out = commands::Output::create(&cfg.output_dir)?;
    match cli.command {
        Command::Solve => commands::solve(&cfg, &setup, &out),
        Command::OperatorEval => commands::operator_eval(&cfg, &setup, &out, cli.strict),
        Command::Verify => commands::verify(&cfg, &setup, &out),
        Command::Green => commands::green(&cfg, &setup, &out),
        Command::FitDecay => commands::fit_decay(&cfg, &setup, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) => eprintln!("error: {e:#}"),
                Failure::Verification(m) => eprintln!("verification failed: {m}"),
                Failure::Numerical(e) => eprintln!("numerical failure: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
