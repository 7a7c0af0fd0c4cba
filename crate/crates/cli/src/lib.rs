//! Batch interface over `levy_emm`: TOML configuration in, CSV out.
//!
//! Exit status: 0 success, 1 configuration or validation error, 2 no
//! martingale measure for the requested rule, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{Outcome, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "levy-emm", version, about = "Martingale measures, pricing and convergence experiments for exponential Lévy models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the measure, transform and price by Monte Carlo (price.csv).
    Price(RunArgs),
    /// Solve for the minimal-entropy (Esscher) measure only (esscher.csv).
    Esscher(RunArgs),
    /// Solve for the q-optimal measure only (qopt.csv).
    Qopt(RunArgs),
    /// Run a model-sequence experiment (hypotheses.csv, regimes.csv, prices.csv).
    Converge(RunArgs),
    /// Check the Wiener–Hopf product identity at an exponential time (wiener_hopf.csv).
    WienerHopf(RunArgs),
    /// Run the closed-form regression battery.
    Selftest,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: configured out_dir, else the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured path count.
    #[arg(long)]
    pub paths: Option<usize>,
}

impl RunArgs {
    pub fn load(&self) -> anyhow::Result<(RunConfig, PathBuf)> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(p) = self.paths {
            cfg.mc.paths = p;
        }
        let out = self.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        Ok((cfg, out))
    }
}

/// Exit status for an error: 1 for configuration and parameter problems, 3 otherwise.
pub fn error_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match e.downcast_ref::<levy_emm::Error>() {
        Some(levy_emm::Error::InvalidParameter(_)) | Some(levy_emm::Error::Unsupported(_)) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn run_with(args: &RunArgs, f: fn(&RunConfig, &std::path::Path) -> anyhow::Result<Outcome>) -> anyhow::Result<Outcome> {
    let (cfg, out) = args.load()?;
    f(&cfg, &out)
}

/// Run one command; diagnostics go to standard error.
pub fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Price(a) => run_with(a, commands::price),
        Command::Esscher(a) => run_with(a, commands::esscher),
        Command::Qopt(a) => run_with(a, commands::qopt),
        Command::Converge(a) => run_with(a, commands::converge),
        Command::WienerHopf(a) => run_with(a, commands::wiener_hopf),
        Command::Selftest => {
            let checks = selftest::run_battery();
            for c in &checks {
                println!("{}  {}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let code = if checks.iter().all(|c| c.pass) { EXIT_OK } else { EXIT_NUMERICAL };
            Ok(Outcome { code, files: Vec::new() })
        }
    };
    match result {
        Ok(o) => {
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if o.code == commands::EXIT_NO_SOLUTION {
                eprintln!("no martingale measure for the requested rule (status no_solution)");
            }
            o.code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            error_code(&e)
        }
    }
}
