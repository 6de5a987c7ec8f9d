use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cra_cli::commands;
use cra_cli::config::{ExperimentConfig, ExperimentKind, PolicyName};

/// Cognitive random access experiments over Poisson transmitter fields.
///
/// Every data file is CSV preceded by a `#`-prefixed copy of the resolved
/// configuration, which reproduces the run when fed back via --config.
#[derive(Parser)]
#[command(name = "cra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump pdf and cdf of the conditional interference distribution.
    Cid(Common),
    /// Compare the CID with rejection-conditioned Monte Carlo.
    ValidateCid(Common),
    /// Area spectral efficiency of all policies over a density sweep.
    AseSweep {
        #[command(flatten)]
        common: Common,
        /// Swept density; defaults to the config's experiment or lambda-s.
        #[arg(long)]
        sweep: Option<SweepAxis>,
    },
    /// Positions and assigned probabilities of one network realisation.
    Snapshot(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file (flat keys, human units).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo snapshots per sweep point.
    #[arg(long)]
    snapshots: Option<u64>,
    /// Policy reported by `snapshot`.
    #[arg(long, value_enum)]
    policy: Option<PolicyName>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepAxis {
    LambdaS,
    LambdaP,
}

fn load(common: &Common, experiment: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = experiment;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = common.snapshots {
        cfg.snapshots = n;
    }
    if let Some(p) = common.policy {
        if experiment != ExperimentKind::SnapshotDump {
            bail!("--policy only applies to `snapshot`; sweeps always compare every policy");
        }
        cfg.policy = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, cfg) = match &cli.command {
        Command::Cid(c) => (c, load(c, ExperimentKind::CidDump)?),
        Command::ValidateCid(c) => (c, load(c, ExperimentKind::ValidateCid)?),
        Command::Snapshot(c) => (c, load(c, ExperimentKind::SnapshotDump)?),
        Command::AseSweep { common, sweep } => {
            let from_file = match &common.config {
                Some(path) => ExperimentConfig::load(path)?.experiment,
                None => ExperimentKind::AseSweepLambdaS,
            };
            let kind = match sweep {
                Some(SweepAxis::LambdaS) => ExperimentKind::AseSweepLambdaS,
                Some(SweepAxis::LambdaP) => ExperimentKind::AseSweepLambdaP,
                None if from_file.is_sweep() => from_file,
                None => ExperimentKind::AseSweepLambdaS,
            };
            (common, load(common, kind)?)
        }
    };
    if common.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    let data = commands::run(&cfg, common.threads)?;
    match &common.out {
        Some(path) => {
            std::fs::write(path, data).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{data}"),
    }
    Ok(())
}
