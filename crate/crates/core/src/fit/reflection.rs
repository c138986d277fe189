//! Joint fit of reflection sweeps.
//!
//! Model, per power i and detuning j (u = delta_j / Gamma2):
//!
//!   r_ij = e^{i phi} [ 1 - (Gamma1e/Gamma2) (1 - i u) / (1 + u^2 + s W_i) ]
//!
//! All powers share (Gamma1e, Gamma2, s); the drive power enters as
//! Omega^2 = c W with the scale s = c/(Gamma1 Gamma2) absorbed into one
//! parameter, so Gamma1 itself is not separately identifiable from a sweep.
//! The global phase phi soaks up the VNA normalization phase; the amplitude
//! normalization is fixed at one, which is what lets normalization errors
//! show up in eta' (see [`normalization_mc`]). Uniform weights across all
//! power traces.

use super::lm::{levenberg_marquardt, FitError, LmOptions, LsqModel};
use super::{FitParam, FitReport};
use crate::units;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Complex reflection samples over a power x detuning grid.
#[derive(Debug, Clone)]
pub struct ReflectionSweep {
    pub powers_dbm: Vec<f64>,
    /// Probe detunings, rad/us.
    pub detunings: Vec<f64>,
    /// r[i][j]: power i, detuning j.
    pub r: Vec<Vec<C64>>,
}

impl ReflectionSweep {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.r.len() != self.powers_dbm.len()
            || self.r.iter().any(|row| row.len() != self.detunings.len())
        {
            return Err(FitError::Input("sweep matrix shape mismatch".into()));
        }
        if !self.powers_dbm.windows(2).all(|w| w[0] < w[1]) {
            return Err(FitError::Input("powers must be strictly increasing".into()));
        }
        for row in &self.r {
            for v in row {
                if v.norm() > 1.1 {
                    return Err(FitError::Input(format!("|r| = {} exceeds 1.1", v.norm())));
                }
            }
        }
        Ok(())
    }

    pub fn powers_watt(&self) -> Vec<f64> {
        self.powers_dbm.iter().map(|&d| units::dbm_to_watt(d)).collect()
    }
}

struct ReflModel<'a> {
    sweep: &'a ReflectionSweep,
    watts: Vec<f64>,
}

impl ReflModel<'_> {
    #[inline]
    fn model_at(p: &[f64], w: f64, delta: f64) -> C64 {
        let (g1e, g2, s, phi) = (p[0], p[1], p[2], p[3]);
        let u = delta / g2;
        let d = 1.0 + u * u + s * w;
        let core = C64::new(1.0, -u) * (g1e / g2 / d);
        C64::new(0.0, phi).exp() * (C64::new(1.0, 0.0) - core)
    }
}

impl LsqModel for ReflModel<'_> {
    fn n_residuals(&self) -> usize {
        2 * self.sweep.powers_dbm.len() * self.sweep.detunings.len()
    }
    fn n_params(&self) -> usize {
        4
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let mut k = 0;
        for (i, &w) in self.watts.iter().enumerate() {
            for (j, &delta) in self.sweep.detunings.iter().enumerate() {
                let m = Self::model_at(p, w, delta) - self.sweep.r[i][j];
                out[k] = m.re;
                out[k + 1] = m.im;
                k += 2;
            }
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) -> bool {
        let (g1e, g2, s, phi) = (p[0], p[1], p[2], p[3]);
        let ephi = C64::new(0.0, phi).exp();
        let mut k = 0;
        for (_, &w) in self.watts.iter().enumerate() {
            for &delta in &self.sweep.detunings {
                let u = delta / g2;
                let n = C64::new(1.0, -u);
                let d = 1.0 + u * u + s * w;
                let dm_dg1e = -ephi * n / (g2 * d);
                // d(N/D)/du, with du/dg2 = -u/g2
                let dnd_du = (C64::new(0.0, -1.0) * d - n * (2.0 * u)) / (d * d);
                let dcore_dg2 =
                    -(g1e / (g2 * g2)) * n / d + (g1e / g2) * dnd_du * (-u / g2);
                let dm_dg2 = -ephi * dcore_dg2;
                let dm_ds = ephi * n * (g1e / g2 * w / (d * d));
                let m = Self::model_at(p, w, delta);
                let dm_dphi = C64::new(0.0, 1.0) * m;
                for (col, dm) in [dm_dg1e, dm_dg2, dm_ds, dm_dphi].into_iter().enumerate() {
                    out[(k, col)] = dm.re;
                    out[(k + 1, col)] = dm.im;
                }
                k += 2;
            }
        }
        true
    }
}

/// Result of [`fit_reflection`]: eta' = Gamma1e / (2 Gamma2), clamped to 1
/// in `eta_prime` with the raw value retained.
#[derive(Debug, Clone)]
pub struct ReflectionFit {
    pub report: FitReport,
    pub eta_prime: f64,
    pub eta_prime_raw: f64,
    pub eta_prime_sigma: f64,
}

fn initial_guess(sweep: &ReflectionSweep, watts: &[f64]) -> [f64; 4] {
    // phase from the most detuned samples, where r ~ e^{i phi}
    let j_edge = 0;
    let mut edge = C64::new(0.0, 0.0);
    for row in &sweep.r {
        edge += row[j_edge] + row[sweep.detunings.len() - 1];
    }
    let phi0 = edge.arg();
    let rot = C64::new(0.0, -phi0).exp();

    // resonance dip of the weakest trace
    let row0 = &sweep.r[0];
    let (mut dip, mut j_dip) = (0.0f64, 0usize);
    for (j, v) in row0.iter().enumerate() {
        let d = (C64::new(1.0, 0.0) - v * rot).norm();
        if d > dip {
            dip = d;
            j_dip = j;
        }
    }
    let eta0 = (dip / 2.0).clamp(0.05, 1.0);
    // half-width of |1 - r| around the dip
    let half_level = dip / 2.0;
    let mut g2_0 = (sweep.detunings.last().unwrap() - sweep.detunings[0]).abs() / 6.0;
    for j in j_dip..sweep.detunings.len() {
        let d = (C64::new(1.0, 0.0) - row0[j] * rot).norm();
        if d <= half_level {
            // |1-r| ~ 1/sqrt(1+u^2) falls to half at u = sqrt(3)
            g2_0 = (sweep.detunings[j] - sweep.detunings[j_dip]).abs() / 3f64.sqrt();
            break;
        }
    }
    let g1e_0 = 2.0 * g2_0 * eta0;

    // saturation scale from the dip amplitude ratio of weakest vs strongest
    let row_hi = &sweep.r[sweep.r.len() - 1];
    let a_lo = dip;
    let a_hi = (C64::new(1.0, 0.0) - row_hi[j_dip] * rot).norm();
    let (w_lo, w_hi) = (watts[0], watts[watts.len() - 1]);
    let ratio = (a_lo / a_hi.max(1e-12)).max(1.0);
    let denom = w_hi - ratio * w_lo;
    let s0 = if denom > 0.0 { (ratio - 1.0) / denom } else { 1.0 / w_hi };
    [g1e_0, g2_0, s0.max(1e-6 / w_hi), phi0]
}

/// Joint nonlinear least squares across all powers with shared rates and
/// Omega^2 proportional to power.
pub fn fit_reflection(sweep: &ReflectionSweep) -> Result<ReflectionFit, FitError> {
    sweep.validate()?;
    if sweep.powers_dbm.len() < 3 {
        return Err(FitError::Input("need at least 3 powers".into()));
    }
    if sweep.detunings.len() < 7 {
        return Err(FitError::Input("need at least 7 detunings".into()));
    }
    let mean: C64 = sweep
        .r
        .iter()
        .flatten()
        .sum::<C64>()
        / (sweep.r.len() * sweep.detunings.len()) as f64;
    let spread: f64 = sweep
        .r
        .iter()
        .flatten()
        .map(|v| (v - mean).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if spread < 1e-9 {
        return Err(FitError::DegenerateData(
            "sweep is flat; nothing to fit".into(),
        ));
    }

    let watts = sweep.powers_watt();
    let w_ref = watts.iter().cloned().fold(0.0f64, f64::max);
    if !(w_ref > 0.0) {
        return Err(FitError::Input("powers must be positive".into()));
    }
    // condition the fit by normalizing the power axis; s rescales back below
    let watts_n: Vec<f64> = watts.iter().map(|&w| w / w_ref).collect();
    let model = ReflModel { sweep, watts: watts_n.clone() };
    let p0 = initial_guess(sweep, &watts_n);
    let res = levenberg_marquardt(&model, &p0, &LmOptions::default())?;

    let (g1e, g2) = (res.params[0], res.params[1]);
    let eta_raw = g1e / (2.0 * g2);
    // propagate the covariance through eta' = g1e / (2 g2)
    let de_dg1e = 1.0 / (2.0 * g2);
    let de_dg2 = -g1e / (2.0 * g2 * g2);
    let var = de_dg1e * de_dg1e * res.covariance[(0, 0)]
        + de_dg2 * de_dg2 * res.covariance[(1, 1)]
        + 2.0 * de_dg1e * de_dg2 * res.covariance[(0, 1)];
    let report = FitReport {
        model: "reflection-joint: r = e^{i phi}(1 - (G1e/G2)(1-iu)/(1+u^2+sW))",
        params: vec![
            FitParam { name: "gamma1_e".into(), value: res.params[0], sigma: res.sigmas[0] },
            FitParam { name: "gamma2".into(), value: res.params[1], sigma: res.sigmas[1] },
            FitParam { name: "omega2_scale".into(), value: res.params[2] / w_ref, sigma: res.sigmas[2] / w_ref },
            FitParam { name: "phase".into(), value: res.params[3], sigma: res.sigmas[3] },
        ],
        residual_norm: res.residual_norm,
        iterations: res.iterations,
        converged: res.converged,
        notes: vec![
            "rates in rad/us; eta_prime = gamma1_e / (2 gamma2)".into(),
            "uniform weights across power traces".into(),
        ],
    };
    Ok(ReflectionFit {
        report,
        eta_prime: eta_raw.min(1.0),
        eta_prime_raw: eta_raw,
        eta_prime_sigma: var.max(0.0).sqrt(),
    })
}

/// Spread of eta' under complex normalization jitter.
#[derive(Debug, Clone)]
pub struct McSpread {
    pub mean: f64,
    pub std: f64,
    pub trials: Vec<f64>,
    pub failures: usize,
}

/// Re-fit the sweep `n_trials` times with the complex normalization
/// perturbed by (1 + amp_jitter*xi) e^{i phase_jitter*zeta} and report the
/// standard deviation of the recovered eta'.
pub fn normalization_mc(
    sweep: &ReflectionSweep,
    amp_jitter: f64,
    phase_jitter_rad: f64,
    n_trials: usize,
    seed: u64,
) -> Result<McSpread, FitError> {
    if amp_jitter < 0.0 || phase_jitter_rad < 0.0 {
        return Err(FitError::Input("jitters must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(n_trials);
    let mut failures = 0;
    for _ in 0..n_trials {
        let eps: f64 = rng.sample::<f64, _>(StandardNormal) * amp_jitter;
        let th: f64 = rng.sample::<f64, _>(StandardNormal) * phase_jitter_rad;
        let scale = C64::new(0.0, th).exp() * (1.0 + eps);
        let perturbed = ReflectionSweep {
            powers_dbm: sweep.powers_dbm.clone(),
            detunings: sweep.detunings.clone(),
            r: sweep
                .r
                .iter()
                .map(|row| row.iter().map(|v| v * scale).collect())
                .collect(),
        };
        match fit_reflection(&perturbed) {
            Ok(f) => trials.push(f.eta_prime_raw),
            Err(_) => failures += 1,
        }
    }
    if trials.is_empty() {
        return Err(FitError::DegenerateData("all MC trials failed".into()));
    }
    let mean = trials.iter().sum::<f64>() / trials.len() as f64;
    let var = trials.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (trials.len() as f64 - 1.0).max(1.0);
    Ok(McSpread {
        mean,
        std: var.sqrt(),
        trials,
        failures,
    })
}
