//! `spinqaoa`: evaluate, cross-check and optimize infinite-size QAOA energies.
//!
//! Every subcommand writes JSON lines; each record echoes the resolved
//! configuration so it can be replayed with `--config`.

mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use emit::Emitter;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] spinqaoa_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Errors raised while turning flags into core types are usage errors.
    fn from_setup(e: spinqaoa_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        use spinqaoa_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Capacity { .. }) => 3,
            CliError::Core(E::NumericalHealth(_)) => 4,
            CliError::Core(E::Shape(_) | E::Domain(_) | E::UnsupportedEnsemble(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spinqaoa", version, about)]
struct Cli {
    /// JSON file with the same fields as the flags, plus `command`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the self-consistent equation and report V_p.
    Vp(RunConfig),
    /// Tree iteration for pure Gaussian models and its identity with V_p.
    Tree(RunConfig),
    /// V_p on sparse hypergraphs of growing degree against the Gaussian value.
    Universality(RunConfig),
    /// Exact finite-n disorder average.
    OracleSum(RunConfig),
    /// Statevector Monte Carlo over sampled instances.
    OracleSim(RunConfig),
    /// Multi-start downhill-simplex maximization of V_p.
    Optimize(RunConfig),
    /// Build H_q, check well-playedness and solve the induced equation.
    Wellplayed(RunConfig),
    /// Finite-n generalized multinomial sums against their limit.
    Genmulti(RunConfig),
}

impl Command {
    fn split(self) -> (&'static str, RunConfig) {
        match self {
            Command::Vp(c) => ("vp", c),
            Command::Tree(c) => ("tree", c),
            Command::Universality(c) => ("universality", c),
            Command::OracleSum(c) => ("oracle-sum", c),
            Command::OracleSim(c) => ("oracle-sim", c),
            Command::Optimize(c) => ("optimize", c),
            Command::Wellplayed(c) => ("wellplayed", c),
            Command::Genmulti(c) => ("genmulti", c),
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(RunConfig::load).transpose()?.unwrap_or_default();
    let (name, flags) = match cli.command {
        Some(c) => {
            let (name, flags) = c.split();
            (Some(name.to_string()), flags)
        }
        None => (None, RunConfig::default()),
    };
    let mut cfg = flags.merged_over(file);
    let command =
        name.or(cfg.command.clone()).ok_or_else(|| CliError::Usage("no subcommand given and the config has no `command`".into()))?;
    cfg.command = Some(command.clone());
    let mut em = Emitter::new(&cfg, &command)?;
    let outcome = commands::run(&cfg, &command, &mut em);
    em.finish(cfg.csv.as_deref())?;
    outcome
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinqaoa: {e}");
            if let CliError::Core(spinqaoa_core::Error::Capacity { needed, .. }) = &e {
                eprintln!("hint: raise --budget-ops to at least {needed:.3e} or reduce the problem size");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
