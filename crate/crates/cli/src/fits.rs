//! Fit subcommands consuming the CSV outputs of the simulation commands.

use crate::Ctx;
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use num_complex::Complex64 as C64;
use sps_core::csvio;
use sps_core::fit::{
    fit_decay, fit_reflection, fit_saturation, normalization_mc, DecayKind, DecayWindow,
    FitReport, ReflectionSweep,
};
use sps_core::lindblad::EmissionRecord;
use sps_core::units;
use std::path::PathBuf;

fn print_report(report: &FitReport) {
    println!("model: {}", report.model);
    for note in &report.notes {
        println!("note: {note}");
    }
    println!(
        "converged: {} after {} iterations, residual norm {:.3e}",
        report.converged, report.iterations, report.residual_norm
    );
    for p in &report.params {
        println!("  {:<16} {:>14.8e} +- {:.3e}", p.name, p.value, p.sigma);
    }
    println!();
    print!("{}", report.to_kv());
}

#[derive(Args)]
pub struct FitReflectionArgs {
    /// Reflection sweep CSV (columns power_dbm, detuning_mhz, re, im).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Monte-Carlo trials for the normalization-uncertainty spread.
    #[arg(long, default_value_t = 0)]
    pub mc_trials: usize,
    /// Fractional amplitude jitter for the Monte Carlo.
    #[arg(long, default_value_t = 0.01)]
    pub amp_jitter: f64,
    /// Phase jitter in degrees for the Monte Carlo.
    #[arg(long, default_value_t = 1.0)]
    pub phase_jitter_deg: f64,
}

pub fn fit_reflection_cmd(ctx: &Ctx, args: &FitReflectionArgs) -> Result<()> {
    let table = csvio::read_table(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let col = |name: &str| -> Result<Vec<f64>> {
        table
            .column(name)
            .ok_or_else(|| anyhow::anyhow!("missing column {name}"))
    };
    let powers = col("power_dbm")?;
    let detunings_mhz = col("detuning_mhz")?;
    let re = col("re")?;
    let im = col("im")?;

    let mut power_axis: Vec<f64> = powers.clone();
    power_axis.dedup();
    let mut detuning_axis: Vec<f64> = Vec::new();
    for &d in &detunings_mhz {
        if detuning_axis.contains(&d) {
            break;
        }
        detuning_axis.push(d);
    }
    let nd = detuning_axis.len();
    if nd == 0 || powers.len() != power_axis.len() * nd {
        bail!("sweep CSV is not a full power x detuning grid");
    }
    let r: Vec<Vec<C64>> = (0..power_axis.len())
        .map(|i| {
            (0..nd)
                .map(|j| C64::new(re[i * nd + j], im[i * nd + j]))
                .collect()
        })
        .collect();
    let sweep = ReflectionSweep {
        powers_dbm: power_axis,
        detunings: detuning_axis
            .iter()
            .map(|&mhz| units::mhz_to_rad_per_us(mhz))
            .collect(),
        r,
    };
    let fit = fit_reflection(&sweep)?;
    print_report(&fit.report);
    println!("eta_prime = {}", fit.eta_prime);
    println!("eta_prime_raw = {}", fit.eta_prime_raw);
    println!("eta_prime_sigma = {}", fit.eta_prime_sigma);
    println!(
        "gamma1_e_mhz = {}",
        units::rad_per_us_to_mhz(fit.report.param("gamma1_e").unwrap().value)
    );
    println!(
        "gamma2_mhz = {}",
        units::rad_per_us_to_mhz(fit.report.param("gamma2").unwrap().value)
    );
    if args.mc_trials > 0 {
        let mc = normalization_mc(
            &sweep,
            args.amp_jitter,
            args.phase_jitter_deg.to_radians(),
            args.mc_trials,
            ctx.cfg.seed,
        )?;
        println!("eta_prime_mc_mean = {}", mc.mean);
        println!("eta_prime_mc_spread = {}", mc.std);
        println!("mc_failures = {}", mc.failures);
    }
    Ok(())
}

#[derive(Args)]
pub struct FitSaturationArgs {
    /// CSV with either power_w or power_dbm plus a value column.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Name of the value column.
    #[arg(long, default_value = "value")]
    pub value_col: String,
}

pub fn fit_saturation_cmd(_ctx: &Ctx, args: &FitSaturationArgs) -> Result<()> {
    let table = csvio::read_table(&args.input)?;
    let powers_w = match table.column("power_w") {
        Some(p) => p,
        None => table
            .column("power_dbm")
            .ok_or_else(|| anyhow::anyhow!("need a power_w or power_dbm column"))?
            .iter()
            .map(|&d| units::dbm_to_watt(d))
            .collect(),
    };
    let values = table
        .column(&args.value_col)
        .ok_or_else(|| anyhow::anyhow!("missing column {}", args.value_col))?;
    let (report, a, k) = fit_saturation(&powers_w, &values)?;
    print_report(&report);
    println!("A = {a}");
    println!("k_per_watt = {k}");
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Amplitude,
    Power,
}

#[derive(Args)]
pub struct FitDecayArgs {
    /// Emission record CSV (columns t_ns, re_amp, im_amp, power), e.g. one
    /// Rabi trace filtered to a single theta.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Which envelope to fit.
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Fit window as start:end in ns.
    #[arg(long)]
    pub window: String,
}

pub fn fit_decay_cmd(_ctx: &Ctx, args: &FitDecayArgs) -> Result<()> {
    let table = csvio::read_table(&args.input)?;
    let t = table
        .column("t_ns")
        .ok_or_else(|| anyhow::anyhow!("missing column t_ns"))?;
    let re = table
        .column("re_amp")
        .ok_or_else(|| anyhow::anyhow!("missing column re_amp"))?;
    let im = table
        .column("im_amp")
        .ok_or_else(|| anyhow::anyhow!("missing column im_amp"))?;
    let power = table
        .column("power")
        .ok_or_else(|| anyhow::anyhow!("missing column power"))?;
    let drive_end = table
        .meta
        .get("drive_end_ns")
        .and_then(|v| v.parse::<f64>().ok())
        .unwrap_or(0.0);
    let rec = EmissionRecord {
        times_ns: t,
        amp: re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect(),
        power,
        populations: [Vec::new(), Vec::new(), Vec::new()],
        drive_end_ns: drive_end,
    };
    let (start, end) = args
        .window
        .split_once(':')
        .ok_or_else(|| anyhow::anyhow!("window must be start:end"))?;
    let window = DecayWindow {
        start_ns: start.parse().context("window start")?,
        end_ns: end.parse().context("window end")?,
    };
    let kind = match args.kind {
        KindArg::Amplitude => DecayKind::Amplitude,
        KindArg::Power => DecayKind::Power,
    };
    let (report, rate, sigma) = fit_decay(&rec, kind, window)?;
    print_report(&report);
    println!("rate_per_ns = {rate}");
    println!("rate_mhz = {}", units::rad_per_us_to_mhz(rate * 1e3));
    println!("rate_sigma_mhz = {}", units::rad_per_us_to_mhz(sigma * 1e3));
    Ok(())
}
