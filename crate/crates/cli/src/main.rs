//! `xbar-bench`: data generation, training, crossbar conversion, variability
//! sweeps, cost tables and sweep reports for the hand-gesture benchmark.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "xbar-bench", version, about)]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Sweep seeds, e.g. `0,1,2` or `0..10`; overrides `sweep.seeds`.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "XBAR_BENCH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate the synthetic dataset.
    GenData,
    /// Train one model per fold and network, and measure fixed-point loss.
    Train,
    /// Map the trained models onto crossbar tiles and summarise the mapping.
    Convert,
    /// Run the device-variability sweep.
    Sweep,
    /// Cost every network and compare with the published figures.
    Cost,
    /// Summarise a finished sweep and judge the degradation trend.
    Report,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Missing(String),
    Numeric(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Missing(m) => write!(f, "missing or unreadable artifact: {m}"),
            CliError::Numeric(m) => write!(f, "numeric fault: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<xbar_core::Error> for CliError {
    fn from(e: xbar_core::Error) -> Self {
        use xbar_core::Error as E;
        match e {
            E::InvalidConfig(_) => CliError::Config(e.to_string()),
            E::NumericFault(_) => CliError::Numeric(e.to_string()),
            E::Container(_) | E::Shape(_) => CliError::Missing(e.to_string()),
            E::Io(_) => CliError::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("i/o error: {e}"))
    }
}

/// Accepts `a,b,c` or a half-open range `a..b`.
fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("--seeds `{text}` is not a list like 0,1,2 or a range like 0..10"));
    let seeds: Vec<u64> = match text.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse::<u64>().map_err(|_| bad())?, b.trim().parse::<u64>().map_err(|_| bad())?);
            (a..b).collect()
        }
        None => text
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?,
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.seeds {
        cfg.sweep.seeds = parse_seeds(s)?;
        cfg.validate()?;
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("xbar-out"));
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    }
    let ctx = commands::Context { cfg, out_dir };
    match cli.command {
        Command::GenData => commands::gen_data(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Convert => commands::convert(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Cost => commands::cost(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xbar-bench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists_and_ranges() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("7, 3,9").unwrap(), vec![7, 3, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a,b").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
