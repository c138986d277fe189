//! Simulation subcommands: spectrum, budget, Rabi dynamics, reflection
//! sweeps and two-time correlations.

use crate::Ctx;
use anyhow::{Context, Result};
use clap::Args;
use sps_core::csvio;
use sps_core::device::{
    efficiency_budget, flux_sensitivity, pure_dephasing_1f, transition_frequencies, BudgetInput,
};
use sps_core::lindblad::{
    apply_detection_filter, emission_observables, evolve, integrated_correlations, reflection,
    two_time_correlations, DensityMatrix3, TimeGrid,
};
use sps_core::units;
use std::f64::consts::PI;

#[derive(Args)]
pub struct SpectrumArgs {
    /// Start of the flux sweep, Phi/Phi0.
    #[arg(long, default_value_t = -0.45)]
    pub from: f64,
    /// End of the flux sweep, Phi/Phi0.
    #[arg(long, default_value_t = 0.45)]
    pub to: f64,
    /// Number of flux points.
    #[arg(long, default_value_t = 181)]
    pub points: usize,
}

pub fn spectrum(ctx: &Ctx, args: &SpectrumArgs) -> Result<()> {
    let mut rows = Vec::new();
    let noise = ctx.cfg.noise;
    for k in 0..args.points {
        let flux = args.from + (args.to - args.from) * k as f64 / (args.points - 1).max(1) as f64;
        let q = ctx.cfg.qubit.at_flux(flux);
        // flux points outside the transmon regime are skipped
        let Ok(s) = transition_frequencies(&q) else {
            continue;
        };
        let grad = flux_sensitivity(&q)?;
        let gamma_1f = pure_dephasing_1f(&noise, grad);
        rows.push(vec![
            flux,
            q.ej_ghz(),
            s.omega01_ghz,
            s.omega12_ghz,
            s.anharmonicity_ghz,
            grad,
            units::rad_per_us_to_mhz(gamma_1f),
        ]);
    }
    let path = ctx.out_path("spectrum.csv");
    csvio::write_table(
        &path,
        &ctx.cfg.summary_pairs(),
        &[
            "flux",
            "ej_ghz",
            "omega01_ghz",
            "omega12_ghz",
            "anharmonicity_ghz",
            "domega01_dflux_ghz",
            "gamma_1f_mhz",
        ],
        &mut rows.into_iter(),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Args)]
pub struct BudgetArgs {
    /// Preparation error alpha_p.
    #[arg(long, default_value_t = 0.01)]
    pub alpha_p: f64,
    /// Coupling ratio alpha_c^2 = Gamma1c/Gamma1e.
    #[arg(long, default_value_t = 0.01)]
    pub alpha_c2: f64,
    /// Stray control-to-emission coupling beta.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Minimal preparation pulse time, ns.
    #[arg(long, default_value_t = 2.0)]
    pub dt_min: f64,
    /// Emission relaxation rate Gamma1e as cyclic MHz; defaults to
    /// (0.2 us)^-1 like the reference budget.
    #[arg(long)]
    pub gamma1e_mhz: Option<f64>,
}

pub fn budget(ctx: &Ctx, args: &BudgetArgs) -> Result<()> {
    let gamma1_e = match args.gamma1e_mhz {
        Some(mhz) => units::mhz_to_rad_per_us(mhz),
        None => 5.0, // (0.2 us)^-1
    };
    let input = BudgetInput {
        alpha_p: args.alpha_p,
        alpha_c2: args.alpha_c2,
        beta: args.beta,
        dt_min_ns: args.dt_min,
        omega_rad_s: 2.0 * PI * ctx.cfg.chain.carrier_ghz * 1e9,
        gamma1_e,
        gamma1_n: ctx.cfg.rates.gamma1_n,
    };
    let r = efficiency_budget(&input).context("budget evaluation")?;
    println!("photon generation budget");
    println!("  preparation pulse length   {:>12.3} ns", r.dt_ns);
    println!("  drive power                {:>12.3e} W", r.drive_power_w);
    println!("  pulse energy               {:>12.3e} J", r.pulse_energy_j);
    println!("  direct leakage alpha_l     {:>12.3e}", r.leakage);
    println!("  coupling efficiency eta    {:>12.4}", r.coupling_efficiency);
    println!("  total generation efficiency{:>12.4}", r.total_efficiency);
    println!();
    println!("dt_ns = {}", r.dt_ns);
    println!("drive_power_w = {}", r.drive_power_w);
    println!("pulse_energy_j = {}", r.pulse_energy_j);
    println!("leakage = {}", r.leakage);
    println!("coupling_efficiency = {}", r.coupling_efficiency);
    println!("total_efficiency = {}", r.total_efficiency);
    Ok(())
}

#[derive(Args)]
pub struct RabiArgs {
    /// Number of Rabi angles across [0, 2 pi].
    #[arg(long, default_value_t = 33)]
    pub points: usize,
    /// Detection bandwidth in MHz applied to the emitted field (omit for
    /// unfiltered output).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Output time step, ns.
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
}

pub fn rabi(ctx: &Ctx, args: &RabiArgs) -> Result<()> {
    let q = ctx.cfg.qubit;
    let r = ctx.cfg.rates;
    let grid = TimeGrid::span(
        -ctx.cfg.pulse.half_window_ns(),
        ctx.cfg.pulse.half_window_ns() + 8.0 / units::rad_per_us_to_rad_per_ns(r.gamma1()),
        args.dt,
    );
    let mut meta = ctx.cfg.summary_pairs();
    if let Some(bw) = args.bandwidth {
        meta.push(("bandwidth".into(), format!("{bw} MHz")));
    }
    let mut trace_rows = Vec::new();
    let mut max_rows = Vec::new();
    for k in 0..args.points {
        let theta = 2.0 * PI * k as f64 / (args.points - 1).max(1) as f64;
        let pulse = ctx.cfg.pulse.with_rabi_angle(theta)?;
        let traj = evolve(&q, &r, &pulse, &DensityMatrix3::ground(), &grid)?;
        let mut rec = emission_observables(&traj, &r);
        if let Some(bw) = args.bandwidth {
            rec = apply_detection_filter(&rec, bw);
        }
        let mut max_amp = 0.0f64;
        let mut max_pow = 0.0f64;
        for i in 0..rec.times_ns.len() {
            trace_rows.push(vec![
                theta,
                rec.times_ns[i],
                rec.amp[i].re,
                rec.amp[i].im,
                rec.power[i],
                rec.populations[0][i],
                rec.populations[1][i],
                rec.populations[2][i],
            ]);
            max_amp = max_amp.max(rec.amp[i].norm());
            max_pow = max_pow.max(rec.power[i]);
        }
        max_rows.push(vec![theta, max_amp, max_pow]);
    }
    let traces = ctx.out_path("rabi_traces.csv");
    csvio::write_table(
        &traces,
        &meta,
        &["theta_r", "t_ns", "re_amp", "im_amp", "power", "p0", "p1", "p2"],
        &mut trace_rows.into_iter(),
    )?;
    let maxima = ctx.out_path("rabi_maxima.csv");
    csvio::write_table(
        &maxima,
        &meta,
        &["theta_r", "max_abs_amp", "max_power"],
        &mut max_rows.into_iter(),
    )?;
    println!("wrote {} and {}", traces.display(), maxima.display());
    Ok(())
}

#[derive(Args)]
pub struct ReflectionArgs {
    /// Lowest probe power, dBm.
    #[arg(long, default_value_t = -146.0)]
    pub from_dbm: f64,
    /// Highest probe power, dBm.
    #[arg(long, default_value_t = -116.0)]
    pub to_dbm: f64,
    /// Power step, dB.
    #[arg(long, default_value_t = 2.0)]
    pub step_db: f64,
    /// Detuning half-span in units of Gamma2.
    #[arg(long, default_value_t = 3.5)]
    pub span: f64,
    /// Number of detunings per side.
    #[arg(long, default_value_t = 12)]
    pub detunings: usize,
    /// Omega^2 per watt scale (rad/us)^2 / W; default saturates the
    /// strongest trace like the measured sweep.
    #[arg(long)]
    pub omega2_per_watt: Option<f64>,
}

pub fn reflection_sweep(ctx: &Ctx, args: &ReflectionArgs) -> Result<()> {
    let r = ctx.cfg.rates;
    let g2 = r.gamma2();
    let w_hi = units::dbm_to_watt(args.to_dbm);
    let scale = args
        .omega2_per_watt
        .unwrap_or(50.0 * r.gamma1() * g2 / w_hi);
    let mut rows = Vec::new();
    let mut dbm = args.from_dbm;
    while dbm <= args.to_dbm + 1e-9 {
        let omega = (scale * units::dbm_to_watt(dbm)).sqrt();
        for k in -(args.detunings as i64)..=args.detunings as i64 {
            let delta = k as f64 * args.span * g2 / args.detunings as f64;
            let re = reflection(&r, omega, delta)?;
            rows.push(vec![
                dbm,
                units::rad_per_us_to_mhz(delta),
                re.re,
                re.im,
            ]);
        }
        dbm += args.step_db;
    }
    let mut meta = ctx.cfg.summary_pairs();
    meta.push(("omega2_per_watt".into(), format!("{scale}")));
    let path = ctx.out_path("reflection.csv");
    csvio::write_table(
        &path,
        &meta,
        &["power_dbm", "detuning_mhz", "re", "im"],
        &mut rows.into_iter(),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Args)]
pub struct CorrelationsArgs {
    /// Rabi angle of the train pulses.
    #[arg(long, default_value_t = PI)]
    pub theta_r: f64,
    /// Output grid step, ns.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// tau range beyond one train period, ns.
    #[arg(long, default_value_t = 100.0)]
    pub tau_extra: f64,
    /// Detection bandwidth for the integrated curves, MHz.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Also write the full two-time surfaces (large files).
    #[arg(long)]
    pub surfaces: bool,
}

pub fn correlations(ctx: &Ctx, args: &CorrelationsArgs) -> Result<()> {
    let q = ctx.cfg.qubit;
    let r = ctx.cfg.rates;
    let pulse = ctx.cfg.pulse.with_rabi_angle(args.theta_r)?;
    let train = sps_core::pulse::PulseTrain::new(pulse, ctx.cfg.train_count, ctx.cfg.train_period_ns)?;
    let g1_ns = units::rad_per_us_to_rad_per_ns(r.gamma1());
    let t_end = (pulse.half_window_ns() + 13.0 / g1_ns).min(ctx.cfg.train_period_ns);
    let t_grid = TimeGrid::span(-pulse.half_window_ns(), t_end, args.step);
    let tau_grid = TimeGrid::span(0.0, ctx.cfg.train_period_ns + args.tau_extra, args.step);
    let surf = two_time_correlations(&q, &r, &train, &t_grid, &tau_grid)?;
    let mut meta = ctx.cfg.summary_pairs();
    meta.push(("theta_r_run".into(), format!("{}", args.theta_r)));
    if let Some(bw) = args.bandwidth {
        meta.push(("bandwidth".into(), format!("{bw} MHz")));
    }

    if args.surfaces {
        let mut rows = Vec::new();
        for (i, t) in surf.t_ns.iter().enumerate() {
            for (j, tau) in surf.tau_ns.iter().enumerate() {
                rows.push(vec![*t, *tau, surf.g1[i][j].re, surf.g1[i][j].im, surf.g2[i][j]]);
            }
        }
        let path = ctx.out_path("two_time_surface.csv");
        csvio::write_table(
            &path,
            &meta,
            &["t_ns", "tau_ns", "re_g1", "im_g1", "g2"],
            &mut rows.into_iter(),
        )?;
        println!("wrote {}", path.display());
    }

    let curve = integrated_correlations(&surf, args.bandwidth);
    let rows: Vec<Vec<f64>> = curve
        .tau_ns
        .iter()
        .enumerate()
        .map(|(j, tau)| vec![*tau, curve.g1[j].re, curve.g1[j].im, curve.g2[j]])
        .collect();
    let path = ctx.out_path("correlations.csv");
    csvio::write_table(
        &path,
        &meta,
        &["tau_ns", "re_g1", "im_g1", "g2"],
        &mut rows.into_iter(),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}
