mod commands;
mod config;
mod dataset;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use aprank::samplers::Variant;
use clap::{Parser, Subcommand};

use commands::Stage;
use config::{RunConfig, OUT_DIR_ENV};
use output::OutDir;

#[derive(Parser, Debug)]
#[command(name = "aprank", version, about = "Samplers, EM and exact oracles for the algebraic rank model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration (a run's manifest.toml also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ranking data (CSV); needs --schema.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Covariate schema (TOML) for --data.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Output directory; overrides APRANK_OUT_DIR and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of parallel chains.
    #[arg(long, global = true)]
    chains: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Draw a synthetic dataset.
    Simulate,
    /// Data-augmentation (Gibbs) chains.
    Gibbs,
    /// Sandwich chains (uniform move unless [chain] variant says otherwise).
    Sandwich,
    /// Monte Carlo EM for lambda.
    Em,
    /// Exact posterior, transition matrices and spectra.
    Oracle,
    /// Diagnostics on stored traces.
    Diagnose,
}

fn resolve(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.data {
        cfg.data.path = Some(std::path::absolute(d)?);
        cfg.data.counts = None;
    }
    if let Some(s) = &cli.schema {
        cfg.data.schema = Some(std::path::absolute(s)?);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(c) = cli.chains {
        cfg.chain.chains = c;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("aprank-out"));
    let out = std::path::absolute(out)?;
    cfg.out = Some(out.clone());
    cfg.validate()?;
    Ok((cfg, out))
}

fn run(cli: &Cli) -> Result<()> {
    let (cfg, root) = resolve(cli).context(Stage::Config)?;
    let mut out = OutDir::create(root.clone())?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Gibbs => commands::sample(&cfg, &mut out, Variant::Gibbs, "gibbs"),
        Command::Sandwich => commands::sample(&cfg, &mut out, Variant::SandwichUniform, "sandwich"),
        Command::Em => commands::em(&cfg, &mut out),
        Command::Oracle => commands::oracle(&cfg, &mut out),
        Command::Diagnose => commands::diagnose(&cfg, &mut out, &root),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(stage) = err.downcast_ref::<Stage>() {
        return stage.exit_code();
    }
    // untagged library failures are numerical
    if err.chain().any(|e| e.downcast_ref::<aprank::Error>().is_some()) {
        return Stage::Numerical.exit_code();
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
