//! Forward-model / fit round trips for the reflection and saturation
//! fitters, the normalization Monte Carlo, and the fit invariances.

mod support;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sps_core::device::Rates;
use sps_core::fit::{fit_reflection, fit_saturation, normalization_mc, ReflectionSweep};
use sps_core::lindblad::reflection;
use sps_core::units;

/// Eq.-style forward model: sample the reflection over a power x detuning
/// grid with Omega^2 = c W, optionally adding complex Gaussian noise.
fn forward_sweep(
    rates: &Rates,
    powers_dbm: &[f64],
    detunings: &[f64],
    omega2_per_watt: f64,
    noise: f64,
    seed: u64,
) -> ReflectionSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = powers_dbm
        .iter()
        .map(|&dbm| {
            let w = units::dbm_to_watt(dbm);
            let omega = (omega2_per_watt * w).sqrt();
            detunings
                .iter()
                .map(|&d| {
                    let mut v = reflection(rates, omega, d).unwrap();
                    if noise > 0.0 {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        v += C64::new(re, im) * noise / (2.0f64).sqrt();
                    }
                    v
                })
                .collect()
        })
        .collect();
    ReflectionSweep {
        powers_dbm: powers_dbm.to_vec(),
        detunings: detunings.to_vec(),
        r,
    }
}

fn paper_powers() -> Vec<f64> {
    (0..16).map(|k| -146.0 + 2.0 * k as f64).collect()
}

fn detuning_grid(g2: f64, half_span: f64, n_side: usize) -> Vec<f64> {
    let step = half_span * g2 / n_side as f64;
    (-(n_side as i64)..=n_side as i64)
        .map(|k| k as f64 * step)
        .collect()
}

/// Omega^2/W chosen so the strongest trace is driven well into saturation,
/// like the measured sweep.
fn omega2_scale(rates: &Rates) -> f64 {
    let w_hi = units::dbm_to_watt(-116.0);
    50.0 * rates.gamma1() * rates.gamma2() / w_hi
}

#[test]
fn ideal_weak_sweep_recovers_exactly() {
    // noiseless, three nearly identical weak powers
    let rates = Rates::from_mhz(7.0, 0.0, 0.0, 0.0).unwrap();
    let sweep = forward_sweep(
        &rates,
        &[-146.0, -145.9, -145.8],
        &detuning_grid(rates.gamma2(), 3.0, 10),
        omega2_scale(&rates),
        0.0,
        0,
    );
    let fit = fit_reflection(&sweep).unwrap();
    assert!(fit.report.residual_norm < 1e-10, "{}", fit.report.residual_norm);
    assert!((fit.eta_prime_raw - 1.0).abs() < 1e-8);
    let g1e = fit.report.param("gamma1_e").unwrap().value;
    assert!((g1e - rates.gamma1_e).abs() / rates.gamma1_e < 1e-6);
}

#[test]
fn noisy_paper_sweep_recovers_eta_prime() {
    let rates = Rates::from_mhz(7.0, 0.0, 0.0, 0.0).unwrap();
    let sweep = forward_sweep(
        &rates,
        &paper_powers(),
        &detuning_grid(rates.gamma2(), 3.5, 12),
        omega2_scale(&rates),
        0.01,
        7,
    );
    let fit = fit_reflection(&sweep).unwrap();
    assert!(
        (fit.eta_prime_raw - 1.0).abs() < 0.005,
        "eta' = {} +- {}",
        fit.eta_prime_raw,
        fit.eta_prime_sigma
    );
    assert_eq!(fit.eta_prime, fit.eta_prime_raw.min(1.0));
}

#[test]
fn injected_dephasing_shifts_eta_prime_as_expected() {
    let rates = Rates::from_mhz(7.0, 0.0, 0.0, 0.5).unwrap();
    let expected = rates.gamma1_e / (rates.gamma1() + 2.0 * rates.gamma_phi);
    let sweep = forward_sweep(
        &rates,
        &paper_powers(),
        &detuning_grid(rates.gamma2(), 3.5, 12),
        omega2_scale(&rates),
        0.01,
        11,
    );
    let fit = fit_reflection(&sweep).unwrap();
    assert!(
        (fit.eta_prime_raw - expected).abs() / expected < 0.02,
        "eta' {} vs {}",
        fit.eta_prime_raw,
        expected
    );
}

#[test]
fn fit_is_invariant_under_global_phase_rotation() {
    let rates = Rates::from_mhz(7.02, 0.0, 0.0, 0.03).unwrap();
    let sweep = forward_sweep(
        &rates,
        &paper_powers(),
        &detuning_grid(rates.gamma2(), 3.0, 10),
        omega2_scale(&rates),
        0.005,
        3,
    );
    let base = fit_reflection(&sweep).unwrap();
    let phi = 0.7f64;
    let rot = C64::new(0.0, phi).exp();
    let rotated = ReflectionSweep {
        powers_dbm: sweep.powers_dbm.clone(),
        detunings: sweep.detunings.clone(),
        r: sweep
            .r
            .iter()
            .map(|row| row.iter().map(|v| v * rot).collect())
            .collect(),
    };
    let fit = fit_reflection(&rotated).unwrap();
    assert!(
        (fit.eta_prime_raw - base.eta_prime_raw).abs() < 1e-6,
        "{} vs {}",
        fit.eta_prime_raw,
        base.eta_prime_raw
    );
    let got_phi = fit.report.param("phase").unwrap().value
        - base.report.param("phase").unwrap().value;
    assert!((got_phi - phi).abs() < 1e-3, "refitted phase {got_phi}");
}

#[test]
fn normalization_mc_spread() {
    let rates = Rates::from_mhz(7.0, 0.0, 0.0, 0.0).unwrap();
    let sweep = forward_sweep(
        &rates,
        &paper_powers(),
        &detuning_grid(rates.gamma2(), 3.5, 12),
        omega2_scale(&rates),
        0.01,
        19,
    );
    // zero jitter: zero spread
    let mc = normalization_mc(&sweep, 0.0, 0.0, 8, 1).unwrap();
    assert_eq!(mc.std, 0.0);
    // 1% amplitude, 1 degree phase: the reported +-0.01
    let mc = normalization_mc(&sweep, 0.01, 1f64.to_radians(), 48, 2).unwrap();
    assert!(
        (0.005..=0.02).contains(&mc.std),
        "spread {} (mean {})",
        mc.std,
        mc.mean
    );
    // spread grows with amplitude jitter
    let mc_lo = normalization_mc(&sweep, 0.004, 0.0, 48, 3).unwrap();
    let mc_mid = normalization_mc(&sweep, 0.012, 0.0, 48, 3).unwrap();
    let mc_hi = normalization_mc(&sweep, 0.036, 0.0, 48, 3).unwrap();
    assert!(mc_lo.std < mc_mid.std && mc_mid.std < mc_hi.std);
}

#[test]
fn saturation_fit_estimates_eta_prime() {
    // points generated from the reflection model itself at delta = 0
    let rates = Rates::from_mhz(7.02, 0.0, 0.0, 0.032).unwrap();
    let c = omega2_scale(&rates);
    let powers: Vec<f64> = paper_powers().iter().map(|&d| units::dbm_to_watt(d)).collect();
    let values: Vec<f64> = powers
        .iter()
        .map(|&w| {
            let omega = (c * w).sqrt();
            let re = reflection(&rates, omega, 0.0).unwrap();
            (1.0 - re.re) / 2.0
        })
        .collect();
    let (_, a, k) = fit_saturation(&powers, &values).unwrap();
    assert!((a - rates.eta_prime()).abs() < 1e-3, "A = {a} vs {}", rates.eta_prime());
    let expected_k = c / (rates.gamma1() * rates.gamma2());
    assert!((k - expected_k).abs() / expected_k < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    /// Forward-model round trip at 1% noise over random rate draws: the fit
    /// recovers gamma1_e and gamma2 within a few reported sigma and eta'
    /// within 2%.
    #[test]
    fn round_trip_over_random_rates(
        g1e_mhz in 3.0f64..12.0,
        gphi_mhz in 0.0f64..0.8,
        g1c_frac in 0.0f64..0.05,
        seed in 0u64..1000,
    ) {
        let rates = Rates::from_mhz(g1e_mhz, g1c_frac * g1e_mhz, 0.0, gphi_mhz).unwrap();
        let sweep = forward_sweep(
            &rates,
            &paper_powers(),
            &detuning_grid(rates.gamma2(), 3.5, 12),
            omega2_scale(&rates),
            0.01,
            seed,
        );
        let fit = fit_reflection(&sweep).unwrap();
        let g1e = fit.report.param("gamma1_e").unwrap();
        let g2 = fit.report.param("gamma2").unwrap();
        prop_assert!((g1e.value - rates.gamma1_e).abs() < (4.0 * g1e.sigma).max(0.02 * rates.gamma1_e));
        prop_assert!((g2.value - rates.gamma2()).abs() < (4.0 * g2.sigma).max(0.02 * rates.gamma2()));
        prop_assert!((fit.eta_prime_raw - rates.eta_prime()).abs() < 0.02);
    }
}
