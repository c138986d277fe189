//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `-- --nocapture` to see them all). Tolerances are pinned in the
//! assertions, not configurable.

mod support;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sps_core::chain::{synthesize, ChainConfig, RecordSchedule, SourceSpec};
use sps_core::correlator::{
    correlate, normalize_g2, subtract_background, CorrConfig, KernelMode, RecordSource,
    SynthSource,
};
use sps_core::device::{efficiency_budget, BudgetInput, QubitParams, Rates};
use sps_core::fit::{
    fit_decay, fit_reflection, normalization_mc, DecayKind, DecayWindow, ReflectionSweep,
};
use sps_core::lindblad::{
    convergence_residual, emission_observables, evolve, integrated_correlations, reflection,
    two_time_correlations, DensityMatrix3, TimeGrid,
};
use sps_core::pulse::{Pulse, PulseTrain};
use sps_core::units;
use std::f64::consts::PI;
use std::time::Instant;

fn paper_device() -> (QubitParams, Rates) {
    (
        QubitParams::new(16.8, 0.415, 0.0).unwrap(),
        Rates::from_mhz(7.02, 0.0, 0.0, 0.03).unwrap(),
    )
}

fn gate(criterion: &str, ok: bool, detail: String) {
    println!("[{}] {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

/// Least-squares amplitude for y = A f(x) and the R^2 of that fit.
fn r_squared(y: &[f64], f: &[f64]) -> f64 {
    let sff: f64 = f.iter().map(|v| v * v).sum();
    let sfy: f64 = f.iter().zip(y).map(|(a, b)| a * b).sum();
    let a = sfy / sff;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = y.iter().zip(f).map(|(v, fv)| (v - a * fv) * (v - a * fv)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn criterion_1_rabi_curves() {
    let started = Instant::now();
    let (q, r) = paper_device();
    let n_theta = 25;
    let grid = TimeGrid::span(-6.0, 140.0, 0.5);
    // fixed post-pulse readout time, like the t_m marker of the measured
    // curves: every sweep point has accumulated its full Rabi angle there
    let t_read = grid.times().iter().position(|&t| t >= 6.0).unwrap();
    let mut amps = Vec::new();
    let mut pows = Vec::new();
    let mut thetas = Vec::new();
    for k in 0..n_theta {
        let theta = 2.0 * PI * k as f64 / (n_theta - 1) as f64;
        let p = Pulse::gaussian(2.0, 1.0).with_rabi_angle(theta).unwrap();
        let traj = evolve(&q, &r, &p, &DensityMatrix3::ground(), &grid).unwrap();
        let rec = emission_observables(&traj, &r);
        amps.push(rec.amp[t_read]);
        pows.push(rec.power[t_read]);
        thetas.push(theta);
    }
    // global phase convention: the pi/2 point defines the real axis, so the
    // signed quadrature follows (sin theta)/2
    let rot = C64::new(0.0, -amps[n_theta / 4].arg()).exp();
    let re_amp: Vec<f64> = amps.iter().map(|a| (a * rot).re).collect();
    let f_sin: Vec<f64> = thetas.iter().map(|t| t.sin()).collect();
    let f_pow: Vec<f64> = thetas.iter().map(|t| (t / 2.0).sin().powi(2)).collect();
    let r2_amp = r_squared(&re_amp, &f_sin);
    let r2_pow = r_squared(&pows, &f_pow);
    // diagnostic: the same fit once the decoherence damping envelope is
    // allowed (scan the rate); the shape claim holds at this level
    let mut r2_amp_damped: f64 = r2_amp;
    for k in 0..80 {
        let kappa = 0.005 * k as f64;
        let f: Vec<f64> = thetas.iter().map(|t| t.sin() * (-kappa * t).exp()).collect();
        r2_amp_damped = r2_amp_damped.max(r_squared(&re_amp, &f));
    }
    let secs = started.elapsed().as_secs_f64();
    gate(
        "criterion 1 (Rabi curves)",
        r2_amp >= 0.99 && r2_pow >= 0.99 && secs < 60.0,
        format!(
            "R2(Re<a> ~ sin theta) = {r2_amp:.4}, R2(<a+a> ~ sin^2(theta/2)) = {r2_pow:.4} (>= 0.99 required; damping-corrected amplitude fit reaches {r2_amp_damped:.4}); runtime {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_2_level2_leakage_and_preparation() {
    let (q, r) = paper_device();
    let p = Pulse::gaussian(2.0, 1.0).with_rabi_angle(PI).unwrap();
    let grid = TimeGrid::span(-6.0, 60.0, 0.1);
    let traj = evolve(&q, &r, &p, &DensityMatrix3::ground(), &grid).unwrap();
    // read out at the preparation time (maximum of rho11 = maximum power)
    let (mut p1, mut p2) = (0.0f64, 0.0f64);
    for s in &traj.states {
        if s.population(1) > p1 {
            p1 = s.population(1);
            p2 = s.population(2);
        }
    }
    gate(
        "criterion 2 (|2> leakage, preparation)",
        (p2 - 0.003).abs() <= 0.001 && (p1 - 0.88).abs() <= 0.02,
        format!("rho22 at preparation = {p2:.4} (0.003 +- 0.001), rho11 max = {p1:.3} (0.88 +- 0.02)"),
    );
}

#[test]
fn criterion_3_decay_rate_closure() {
    let (q, r) = paper_device();
    let g1 = units::rad_per_us_to_rad_per_ns(r.gamma1());
    let g2 = units::rad_per_us_to_rad_per_ns(r.gamma2());
    let grid = TimeGrid::span(-6.0, 320.0, 0.5);
    let window = DecayWindow { start_ns: 10.0, end_ns: 300.0 };

    let half_pi = Pulse::gaussian(2.0, 1.0).with_rabi_angle(PI / 2.0).unwrap();
    let traj = evolve(&q, &r, &half_pi, &DensityMatrix3::ground(), &grid).unwrap();
    let rec = emission_observables(&traj, &r);
    let (_, rate2, _) = fit_decay(&rec, DecayKind::Amplitude, window).unwrap();

    let pi_pulse = Pulse::gaussian(2.0, 1.0).with_rabi_angle(PI).unwrap();
    let traj = evolve(&q, &r, &pi_pulse, &DensityMatrix3::ground(), &grid).unwrap();
    let rec = emission_observables(&traj, &r);
    let (_, rate1, _) = fit_decay(&rec, DecayKind::Power, window).unwrap();

    let e1 = (rate1 - g1).abs() / g1;
    let e2 = (rate2 - g2).abs() / g2;
    gate(
        "criterion 3 (decay-rate closure)",
        e1 < 0.02 && e2 < 0.02,
        format!(
            "Gamma1: fitted {:.4} MHz vs injected {:.4} MHz ({:.2}%); Gamma2: fitted {:.4} MHz vs {:.4} MHz ({:.2}%)",
            units::rad_per_us_to_mhz(rate1 * 1e3),
            units::rad_per_us_to_mhz(g1 * 1e3),
            100.0 * e1,
            units::rad_per_us_to_mhz(rate2 * 1e3),
            units::rad_per_us_to_mhz(g2 * 1e3),
            100.0 * e2
        ),
    );
}

#[test]
fn criterion_4_reflection_and_normalization_closure() {
    let rates = Rates::from_mhz(7.0, 0.0, 0.0, 0.0).unwrap();
    let powers: Vec<f64> = (0..16).map(|k| -146.0 + 2.0 * k as f64).collect();
    let g2 = rates.gamma2();
    let detunings: Vec<f64> = (-12..=12).map(|k| k as f64 * 3.0 * g2 / 12.0).collect();
    let w_hi = units::dbm_to_watt(-116.0);
    let omega2_per_watt = 50.0 * rates.gamma1() * g2 / w_hi;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let r_matrix: Vec<Vec<C64>> = powers
        .iter()
        .map(|&dbm| {
            let omega = (omega2_per_watt * units::dbm_to_watt(dbm)).sqrt();
            detunings
                .iter()
                .map(|&d| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    reflection(&rates, omega, d).unwrap() + C64::new(re, im) * 0.01 / (2f64).sqrt()
                })
                .collect()
        })
        .collect();
    let sweep = ReflectionSweep {
        powers_dbm: powers,
        detunings,
        r: r_matrix,
    };
    let fit = fit_reflection(&sweep).unwrap();
    let eta_err = (fit.eta_prime_raw - rates.eta_prime()).abs();
    let mc = normalization_mc(&sweep, 0.01, 1f64.to_radians(), 48, 5).unwrap();
    gate(
        "criterion 4 (reflection/efficiency closure)",
        eta_err <= 0.005 && (mc.std - 0.01).abs() <= 0.005,
        format!(
            "eta' = {:.4} (true {:.4}, |err| = {:.4} <= 0.005); MC spread = {:.4} (0.01 +- 0.005)",
            fit.eta_prime_raw,
            rates.eta_prime(),
            eta_err,
            mc.std
        ),
    );
}

#[test]
fn criterion_5_budget_numbers() {
    let b = BudgetInput {
        alpha_p: 0.01,
        alpha_c2: 0.01,
        beta: 0.0,
        dt_min_ns: 2.0,
        omega_rad_s: 2.0 * PI * 7e9,
        gamma1_e: 5.0, // (0.2 us)^-1
        gamma1_n: 0.0,
    };
    let r = efficiency_budget(&b).unwrap();
    // exact algebra
    let omega_drive = PI / 2e-9;
    let w_exact = units::HBAR * 2.0 * PI * 7e9 * omega_drive * omega_drive / (0.01 * 5e6);
    let e_exact = w_exact * 2e-9;
    let exact_ok = (r.drive_power_w - w_exact).abs() / w_exact < 1e-12
        && (r.pulse_energy_j - e_exact).abs() / e_exact < 1e-12
        && (r.total_efficiency - 0.99 * 0.99).abs() < 1e-12;
    // paper-rounded values within 20%
    let paper_ok = (r.drive_power_w - 2e-10).abs() / 2e-10 < 0.2
        && (r.pulse_energy_j - 4e-19).abs() / 4e-19 < 0.2
        && (r.total_efficiency - 0.98).abs() < 0.01;
    gate(
        "criterion 5 (budget numbers)",
        exact_ok && paper_ok,
        format!(
            "W = {:.4e} W (2.3e-10 exact, ~2e-10 paper), E = {:.4e} J (~4e-19), total = {:.4}",
            r.drive_power_w, r.pulse_energy_j, r.total_efficiency
        ),
    );
}

#[test]
fn criterion_6a_engine_g2_pi_train_filtered() {
    let (q, r) = paper_device();
    let pulse = Pulse::gaussian(2.0, 1.0).with_rabi_angle(PI).unwrap();
    let train = PulseTrain::new(pulse, 16, 512.0).unwrap();
    let t_grid = TimeGrid::span(-6.0, 300.0, 1.0);
    let tau_grid = TimeGrid::span(0.0, 612.0, 1.0);
    let surf = two_time_correlations(&q, &r, &train, &t_grid, &tau_grid).unwrap();
    surf.validate(None).unwrap();
    // unfiltered: zero-lag antibunching is exact
    let raw = integrated_correlations(&surf, None);
    assert!(raw.g2[0].abs() < 1e-12);
    let filtered = integrated_correlations(&surf, Some(12.5));
    // the published estimator integrates over the whole 16-pulse record and
    // normalizes to the average raw side-peak height
    let ratio = sps_core::lindblad::train_center_ratio(&filtered, 512.0, 16);
    gate(
        "criterion 6a (pi-train G2(0), 12.5 MHz filter)",
        (ratio - 0.10).abs() <= 0.03,
        format!("side-peak-normalized G2(0) = {ratio:.3} (0.10 +- 0.03)"),
    );
}

fn coherent_center_ratio(filter_mhz: Option<f64>, seeds: std::ops::Range<u64>) -> (f64, f64) {
    let cfg = ChainConfig {
        record_len: 2048,
        noise_temp_k: 0.05,
        ..ChainConfig::default()
    };
    let train = PulseTrain::new(Pulse::gaussian(2.0, 0.5), 16, 512.0).unwrap();
    let src = SourceSpec::coherent_gaussian(8.0, 1.0, cfg.dt_ns());
    let corr = CorrConfig {
        tau_max: 512,
        kernel: KernelMode::Auto,
        chunk_records: 64,
        workers: 1,
    };
    let mut ratios = Vec::new();
    for seed in seeds {
        let batch = synthesize(&cfg, &src, &train, 1200, 7000 + seed).unwrap();
        let batch = match filter_mhz {
            Some(bw) => batch.filtered(bw),
            None => batch,
        };
        let (est, _) = correlate(&batch, &corr).unwrap();
        let sub = subtract_background(&est).unwrap();
        let norm = normalize_g2(&sub, &train).unwrap();
        ratios.push(norm.normalization.unwrap().center_ratio);
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn criterion_6b_coherent_control_filtered() {
    let (mean, sem) = coherent_center_ratio(Some(12.5), 0..4);
    gate(
        "criterion 6b (coherent control with 12.5 MHz filter)",
        (mean - 0.9).abs() <= 0.05,
        format!("center ratio = {mean:.3} +- {sem:.3} (criterion expects 0.90 +- 0.05; an ideal linear chain gives 1.0, see ledger)"),
    );
}

#[test]
fn criterion_6c_coherent_unfiltered_oracle() {
    let (mean, sem) = coherent_center_ratio(None, 4..8);
    gate(
        "criterion 6c (unfiltered coherent oracle)",
        (mean - 1.0).abs() <= 0.02f64.max(3.0 * sem),
        format!("center ratio = {mean:.4} +- {sem:.4} (1.00 +- 0.02 statistical)"),
    );
}

#[test]
fn criterion_7_estimator_correctness() {
    // (a) bitwise equality with the brute-force oracle on 4096-sample records
    let cfg = ChainConfig {
        record_len: 4096,
        noise_temp_k: 3.0,
        ..ChainConfig::default()
    };
    let train = PulseTrain::new(Pulse::gaussian(2.0, 0.5), 16, 1024.0).unwrap();
    let src = SourceSpec::coherent_gaussian(8.0, 1.5, cfg.dt_ns());
    let batch = synthesize(&cfg, &src, &train, 4, 421).unwrap();
    let corr = CorrConfig {
        tau_max: 64,
        kernel: KernelMode::Direct,
        chunk_records: 16, // all records in one chunk: plain summation order
        workers: 1,
    };
    let (est, _) = correlate(&batch, &corr).unwrap();
    let mut g1 = vec![C64::new(0.0, 0.0); 2 * corr.tau_max + 1];
    let mut g2 = vec![C64::new(0.0, 0.0); corr.tau_max + 1];
    let mut g1_bg = g1.clone();
    let mut g2_bg = g2.clone();
    let mut n_sig = 0u64;
    for idx in 0..batch.n_records() {
        if idx % 2 == 0 {
            support::brute_force_record(
                &batch.records_a[idx],
                &batch.records_b[idx],
                corr.tau_max,
                &mut g1,
                &mut g2,
            );
            n_sig += 1;
        } else {
            support::brute_force_record(
                &batch.records_a[idx],
                &batch.records_b[idx],
                corr.tau_max,
                &mut g1_bg,
                &mut g2_bg,
            );
        }
    }
    // 4 signal records fit one chunk, so chunk sums match the plain loop
    let mut bitwise = true;
    for (k, v) in est.gamma1.iter().enumerate() {
        let o = g1[k] / n_sig as f64;
        bitwise &= v.re.to_bits() == o.re.to_bits() && v.im.to_bits() == o.im.to_bits();
    }
    for tau in 0..=corr.tau_max {
        let o = (g2[tau] / n_sig as f64).re;
        bitwise &= est.gamma2[est.idx(tau as i64)].to_bits() == o.to_bits();
    }

    // (b) thermal -> 2 and coherent -> 1 within 3 sigma
    let cal_cfg = ChainConfig {
        record_len: 640,
        noise_temp_k: 0.05,
        ..ChainConfig::default()
    };
    let cal_train = PulseTrain::new(Pulse::gaussian(2.0, 0.5), 4, 512.0).unwrap();
    let cal_corr = CorrConfig {
        tau_max: 300,
        kernel: KernelMode::Auto,
        chunk_records: 64,
        workers: 1,
    };
    let mut cal = |src: SourceSpec, expected: f64, label: &str| -> (bool, String) {
        let mut ratios = Vec::new();
        for seed in 0..6u64 {
            let batch = synthesize(&cal_cfg, &src, &cal_train, 1500, 3300 + seed).unwrap();
            let (est, _) = correlate(&batch, &cal_corr).unwrap();
            let sub = subtract_background(&est).unwrap();
            let norm = normalize_g2(&sub, &cal_train).unwrap();
            ratios.push(norm.normalization.unwrap().center_ratio);
        }
        let n = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / n;
        let var = ratios.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let sem = (var / n).sqrt();
        (
            sem < 0.05 && (mean - expected).abs() <= 3.0 * sem.max(0.005),
            format!("{label}: {mean:.3} +- {sem:.3} (expect {expected})"),
        )
    };
    let (coh_ok, coh_msg) = cal(
        SourceSpec::coherent_gaussian(8.0, 1.0, cal_cfg.dt_ns()),
        1.0,
        "coherent",
    );
    let (th_ok, th_msg) = cal(
        SourceSpec::thermal_gaussian(8.0, 1.0, cal_cfg.dt_ns()),
        2.0,
        "thermal",
    );

    // (c) a million-record streaming run completes
    let big_cfg = ChainConfig {
        record_len: 128,
        noise_temp_k: 2.0,
        ..ChainConfig::default()
    };
    let big_train = PulseTrain::new(Pulse::gaussian(2.0, 0.8), 1, 400.0).unwrap();
    let big = SynthSource {
        cfg: big_cfg,
        source: SourceSpec::coherent_gaussian(8.0, 1.0, big_cfg.dt_ns()),
        schedule: RecordSchedule::from_train(&big_train),
        n_pairs: 500_000,
        seed: 99,
    };
    let big_corr = CorrConfig {
        tau_max: 16,
        kernel: KernelMode::Fft,
        chunk_records: 256,
        workers: 1,
    };
    let (big_est, big_stats) = correlate(&big, &big_corr).unwrap();
    let big_ok = big_est.n_averages == 500_000 && big_est.n_background == 500_000;

    // (d) SNR grows as sqrt(n): fixed true signal over noise measured from
    // off-peak lags across a seed ensemble
    let snr_cfg = ChainConfig {
        record_len: 256,
        noise_temp_k: 2.0,
        ..ChainConfig::default()
    };
    let snr_train = PulseTrain::new(Pulse::gaussian(2.0, 0.8), 1, 500.0).unwrap();
    let snr_src = SourceSpec::coherent_gaussian(8.0, 1.0, snr_cfg.dt_ns());
    let snr_corr = CorrConfig {
        tau_max: 24,
        kernel: KernelMode::Fft,
        chunk_records: 64,
        workers: 1,
    };
    // deterministic signal level from a noiseless run
    let quiet = ChainConfig { noise_temp_k: 0.0, ..snr_cfg };
    let batch = synthesize(&quiet, &snr_src, &snr_train, 1, 1).unwrap();
    let (quiet_est, _) = correlate(&batch, &snr_corr).unwrap();
    let signal: f64 = (-6i64..=6).map(|u| quiet_est.gamma2[quiet_est.idx(u)]).sum();

    let sizes = [200usize, 800, 3200, 12800];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (si, &n_pairs) in sizes.iter().enumerate() {
        let mut sq_sum = 0.0;
        let mut count = 0usize;
        let mut bins: Vec<Vec<f64>> = Vec::new();
        for seed in 0..10u64 {
            let source = SynthSource {
                cfg: snr_cfg,
                source: snr_src.clone(),
                schedule: RecordSchedule::from_train(&snr_train),
                n_pairs,
                seed: 5200 + 100 * si as u64 + seed,
            };
            let (est, _) = correlate(&source, &snr_corr).unwrap();
            let sub = subtract_background(&est).unwrap();
            bins.push(
                (12i64..=24)
                    .flat_map(|u| [sub.gamma2[sub.idx(u)], sub.gamma2[sub.idx(-u)]])
                    .collect(),
            );
        }
        let n_bins = bins[0].len();
        for b in 0..n_bins {
            let vals: Vec<f64> = bins.iter().map(|row| row[b]).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            sq_sum += vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (vals.len() - 1) as f64;
            count += 1;
        }
        let noise = (sq_sum / count as f64).sqrt();
        xs.push((n_pairs as f64).log10());
        ys.push((signal / noise).log10());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let snr_ok = (slope - 0.5).abs() <= 0.05;

    gate(
        "criterion 7 (estimator correctness)",
        bitwise && coh_ok && th_ok && big_ok && snr_ok,
        format!(
            "bitwise vs brute force on 4096-sample records: {bitwise}; {coh_msg}; {th_msg}; 1e6-record run: {} records at {:.0} MB/s; SNR log-log slope = {slope:.3} (0.5 +- 0.05)",
            big_est.n_averages + big_est.n_background,
            big_stats.throughput_mbps
        ),
    );
}

#[test]
fn criterion_8_throughput_and_worker_determinism() {
    let cfg = ChainConfig {
        record_len: 2048,
        noise_temp_k: 4.0,
        ..ChainConfig::default()
    };
    let train = PulseTrain::new(Pulse::gaussian(2.0, 0.5), 16, 512.0).unwrap();
    let src = SourceSpec::coherent_gaussian(8.0, 1.0, cfg.dt_ns());
    let batch = synthesize(&cfg, &src, &train, 768, 2024).unwrap();
    let corr = CorrConfig {
        tau_max: 512,
        kernel: KernelMode::Auto,
        chunk_records: 64,
        workers: 1,
    };
    // warm up (plans, page faults), then measure
    let _ = correlate(&batch, &corr).unwrap();
    let (_, stats) = correlate(&batch, &corr).unwrap();

    // bitwise identity across worker counts on a smaller batch
    let small = synthesize(&cfg, &src, &train, 96, 2025).unwrap();
    let runs: Vec<_> = [1usize, 2, 4, 8]
        .iter()
        .map(|&workers| {
            let c = CorrConfig {
                workers,
                chunk_records: 8,
                ..corr
            };
            correlate(&small, &c).unwrap().0
        })
        .collect();
    let mut identical = true;
    for est in &runs[1..] {
        for (a, b) in est.gamma1.iter().zip(&runs[0].gamma1) {
            identical &= a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits();
        }
        for (a, b) in est.gamma2.iter().zip(&runs[0].gamma2) {
            identical &= a.to_bits() == b.to_bits();
        }
    }
    gate(
        "criterion 8 (throughput + determinism)",
        stats.throughput_mbps >= 100.0 && identical,
        format!(
            "sustained {:.0} MB/s per worker at tau_max = 512 ({} records, {:.2} s); bitwise identical across 1/2/4/8 workers: {identical}",
            stats.throughput_mbps, stats.records, stats.seconds
        ),
    );
}

#[test]
fn criterion_9_numerical_hygiene() {
    let (q, r) = paper_device();
    // trajectory invariants across the theta sweep
    let grid = TimeGrid::span(-6.0, 180.0, 1.0);
    let mut invariants_ok = true;
    for k in 0..9 {
        let p = Pulse::gaussian(2.0, 1.0)
            .with_rabi_angle(0.25 * PI * k as f64)
            .unwrap();
        let traj = evolve(&q, &r, &p, &DensityMatrix3::ground(), &grid).unwrap();
        invariants_ok &= traj.validate().is_ok();
    }
    // step-halving changes observables by < 1e-6
    let p = Pulse::gaussian(2.0, 1.0).with_rabi_angle(PI).unwrap();
    let residual = convergence_residual(&q, &r, &p, &DensityMatrix3::ground(), &grid);
    // transmon asymptotics vs the charge-basis oracle for EJ/EC >= 20
    let mut spectrum_ok = true;
    let mut worst_rel: f64 = 0.0;
    for ratio in [20.0, 30.0, 50.0, 80.0, 120.0] {
        for flux in [0.0, 0.15, 0.3] {
            let q = QubitParams::new(0.415 * ratio, 0.415, flux).unwrap();
            if q.ej_ghz() / q.ec_ghz < 20.0 {
                continue;
            }
            let s = sps_core::device::transition_frequencies(&q).unwrap();
            let (w01, _) = support::transmon_charge_basis(q.ej_ghz(), q.ec_ghz, 24);
            let rel = (s.omega01_ghz - w01).abs() / w01;
            worst_rel = worst_rel.max(rel);
            spectrum_ok &= rel < 0.01;
        }
    }
    gate(
        "criterion 9 (numerical hygiene)",
        invariants_ok && residual < 1e-6 && spectrum_ok,
        format!(
            "trajectory invariants: {invariants_ok}; step-halving residual = {residual:.2e} (< 1e-6); worst transmon asymptotic deviation = {:.3}% (< 1%)",
            100.0 * worst_rel
        ),
    );
}
