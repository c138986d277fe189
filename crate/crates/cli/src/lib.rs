//! `sps`: simulate, synthesize, correlate and fit a transmon-based microwave
//! single-photon source from one config file.

pub mod fits;
pub mod reproduce;
pub mod sim;
pub mod traces;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sps_core::config::RunConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "sps",
    version,
    about = "Single-photon source simulation and analysis toolkit",
    propagate_version = true
)]
pub struct Cli {
    /// Parameter file (key = value with unit suffixes); defaults to the
    /// shipped paper-default parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for data-parallel stages (env: QPSIM_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmon spectrum vs flux bias.
    Spectrum(sim::SpectrumArgs),
    /// Photon-generation efficiency budget.
    Budget(sim::BudgetArgs),
    /// Pulsed Rabi dynamics of the emission field.
    Rabi(sim::RabiArgs),
    /// Continuous-drive reflection sweeps in the emission line.
    Reflection(sim::ReflectionArgs),
    /// Two-time correlation functions from the master equation.
    Correlations(sim::CorrelationsArgs),
    /// Synthesize two-channel heterodyne trace batches.
    Synth(traces::SynthArgs),
    /// Run the correlation estimators over trace files.
    Correlate(traces::CorrelateArgs),
    /// Fit a reflection sweep CSV for rates and eta'.
    FitReflection(fits::FitReflectionArgs),
    /// Fit the on-resonance saturation curve A/(1 + kW).
    FitSaturation(fits::FitSaturationArgs),
    /// Fit an exponential decay envelope of an emission record CSV.
    FitDecay(fits::FitDecayArgs),
    /// Regenerate the standard figure datasets from the default parameters.
    Reproduce(reproduce::ReproduceArgs),
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(path) => RunConfig::from_path(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(w) = cli.workers {
            cfg.corr.workers = w;
        }
        if let Ok(env_workers) = std::env::var("QPSIM_WORKERS") {
            cfg.corr.workers = env_workers
                .parse()
                .context("QPSIM_WORKERS must be an integer")?;
        }
        if cfg.corr.workers == 0 {
            cfg.corr.workers = 1;
        }
        Ok(Self {
            cfg,
            out: cli.out.clone(),
        })
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn build_cli() -> clap::Command {
    use clap::CommandFactory;
    Cli::command()
}

pub fn run_main() -> Result<()> {
    let cli = Cli::parse();
    let ctx = Ctx::new(&cli)?;
    match &cli.command {
        Command::Spectrum(args) => sim::spectrum(&ctx, args),
        Command::Budget(args) => sim::budget(&ctx, args),
        Command::Rabi(args) => sim::rabi(&ctx, args),
        Command::Reflection(args) => sim::reflection_sweep(&ctx, args),
        Command::Correlations(args) => sim::correlations(&ctx, args),
        Command::Synth(args) => traces::synth(&ctx, args),
        Command::Correlate(args) => traces::correlate_cmd(&ctx, args),
        Command::FitReflection(args) => fits::fit_reflection_cmd(&ctx, args),
        Command::FitSaturation(args) => fits::fit_saturation_cmd(&ctx, args),
        Command::FitDecay(args) => fits::fit_decay_cmd(&ctx, args),
        Command::Reproduce(args) => reproduce::run(&ctx, args),
    }
}
