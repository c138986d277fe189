//! Synthetic two-channel heterodyne detection chain.
//!
//! A source field s(t) (photon-flux-amplitude units, sqrt(photons/ns)) is
//! split on the hybrid coupler as S_A = (s + v)/sqrt(2), S_B = (s - v)/sqrt(2)
//! where v models the idle splitter port, mixed to the IF frequency, sampled,
//! and summed with independent per-channel amplifier noise of the configured
//! temperature. Every signal record is immediately followed by a background
//! record with the source off.
//!
//! A word of caution that is easy to trip over: classical traces cannot show
//! antibunching, and a classical noise term of vacuum scale on the idle port
//! biases the quartic estimator (the quantum expectation has those terms
//! normal-ordered away). Quantum G2 predictions belong to the lindblad
//! engine; this module exists to validate the estimators on classical
//! sources with known statistics (coherent g2 = 1, thermal g2 = 2). The idle
//! port noise therefore defaults to zero and is configurable for the
//! splitter-algebra checks.

pub mod tracefile;

use crate::lindblad::filter::ButterworthLp;
use crate::pulse::PulseTrain;
use crate::units;
use num_complex::{Complex32, Complex64 as C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("chain config error: {0}")]
    Config(String),
}

/// Detection chain settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ChainConfig {
    /// Intermediate frequency after down-conversion, MHz.
    pub f_if_mhz: f64,
    /// Complex sample rate, MS/s.
    pub fs_msps: f64,
    /// Added noise temperature per channel, K.
    pub noise_temp_k: f64,
    /// Samples per record.
    pub record_len: usize,
    /// Linear scale applied to both channels.
    pub gain: f64,
    /// Carrier frequency used to convert kB*T to noise quanta, GHz.
    pub carrier_ghz: f64,
    /// Idle splitter-port noise occupancy in quanta (0 disables; see module
    /// docs for why this is not on by default).
    pub vacuum_noise: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            f_if_mhz: 25.0,
            fs_msps: 250.0,
            noise_temp_k: 4.0,
            record_len: 2048,
            gain: 1.0,
            carrier_ghz: 7.062,
            vacuum_noise: 0.0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        if !(self.fs_msps > 2.0 * self.f_if_mhz) {
            return Err(ChainError::Config(format!(
                "need fs > 2 f_if, got fs = {} MS/s, f_if = {} MHz",
                self.fs_msps, self.f_if_mhz
            )));
        }
        if self.record_len == 0 {
            return Err(ChainError::Config("record_len must be positive".into()));
        }
        if self.noise_temp_k < 0.0 || self.vacuum_noise < 0.0 || !(self.gain > 0.0) {
            return Err(ChainError::Config(
                "noise temperatures must be >= 0 and gain > 0".into(),
            ));
        }
        Ok(())
    }

    /// Sample interval, ns.
    pub fn dt_ns(&self) -> f64 {
        1e3 / self.fs_msps
    }

    /// Record duration, ns.
    pub fn record_span_ns(&self) -> f64 {
        self.record_len as f64 * self.dt_ns()
    }

    /// Per-sample complex noise variance in flux units (photons/ns) for the
    /// configured amplifier temperature: occupancy * complex bandwidth.
    pub fn noise_var_per_sample(&self) -> f64 {
        units::noise_quanta(self.noise_temp_k, self.carrier_ghz) * self.fs_msps * 1e-3
    }

    fn vacuum_var_per_sample(&self) -> f64 {
        self.vacuum_noise * self.fs_msps * 1e-3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceKind {
    Coherent,
    Thermal,
    SimMean,
}

impl SourceKind {
    pub fn label(&self) -> &'static str {
        match self {
            SourceKind::Coherent => "coherent",
            SourceKind::Thermal => "thermal",
            SourceKind::SimMean => "sim-mean",
        }
    }
}

/// Single-pulse envelope sampled on its own grid, normalized to unit pulse
/// energy: sum |f|^2 dt = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub dt_ns: f64,
    /// Time of the first sample relative to the pulse center.
    pub t0_ns: f64,
    pub samples: Vec<C64>,
}

impl Envelope {
    pub fn normalized(dt_ns: f64, t0_ns: f64, mut samples: Vec<C64>) -> Result<Self, ChainError> {
        let energy: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * dt_ns;
        if !(energy > 0.0) {
            return Err(ChainError::Config("envelope has zero energy".into()));
        }
        let scale = 1.0 / energy.sqrt();
        for s in &mut samples {
            *s *= scale;
        }
        Ok(Self {
            dt_ns,
            t0_ns,
            samples,
        })
    }

    /// Gaussian amplitude envelope of width sigma (support +-5 sigma).
    pub fn gaussian(sigma_ns: f64, dt_ns: f64) -> Self {
        let half = 5.0 * sigma_ns;
        let n = (2.0 * half / dt_ns).ceil() as usize + 1;
        let samples: Vec<C64> = (0..n)
            .map(|k| {
                let t = -half + k as f64 * dt_ns;
                C64::new((-t * t / (2.0 * sigma_ns * sigma_ns)).exp(), 0.0)
            })
            .collect();
        Self::normalized(dt_ns, -half, samples).unwrap()
    }

    /// Linear interpolation; zero outside the support.
    pub fn value_at(&self, t_rel_ns: f64) -> C64 {
        let x = (t_rel_ns - self.t0_ns) / self.dt_ns;
        if x < 0.0 || x >= (self.samples.len() - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }
}

/// What the source emits per pulse slot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub envelope: Envelope,
    /// Mean photon number per pulse.
    pub mean_photon: f64,
}

impl SourceSpec {
    pub fn coherent_gaussian(sigma_ns: f64, mean_photon: f64, dt_ns: f64) -> Self {
        Self {
            kind: SourceKind::Coherent,
            envelope: Envelope::gaussian(sigma_ns, dt_ns),
            mean_photon,
        }
    }

    pub fn thermal_gaussian(sigma_ns: f64, mean_photon: f64, dt_ns: f64) -> Self {
        Self {
            kind: SourceKind::Thermal,
            envelope: Envelope::gaussian(sigma_ns, dt_ns),
            mean_photon,
        }
    }

    /// Mean-field envelope imported from an engine emission record.
    pub fn sim_mean(times_ns: &[f64], amp: &[C64], mean_photon: f64) -> Result<Self, ChainError> {
        if times_ns.len() < 2 || times_ns.len() != amp.len() {
            return Err(ChainError::Config("need at least two samples".into()));
        }
        let dt = times_ns[1] - times_ns[0];
        Ok(Self {
            kind: SourceKind::SimMean,
            envelope: Envelope::normalized(dt, times_ns[0], amp.to_vec())?,
            mean_photon,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordKind {
    Signal,
    Background,
}

/// Two-channel IF sample records with interleaved backgrounds.
#[derive(Debug, Clone)]
pub struct IQTraceBatch {
    pub config: ChainConfig,
    pub seed: u64,
    pub source_label: String,
    pub records_a: Vec<Vec<Complex32>>,
    pub records_b: Vec<Vec<Complex32>>,
}

impl IQTraceBatch {
    /// Total records per channel (signal + background).
    pub fn n_records(&self) -> usize {
        self.records_a.len()
    }

    /// Records alternate strictly: even indices signal, odd background.
    pub fn kind(&self, idx: usize) -> RecordKind {
        if idx % 2 == 0 {
            RecordKind::Signal
        } else {
            RecordKind::Background
        }
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if self.records_a.len() != self.records_b.len() {
            return Err(ChainError::Config(
                "channel record counts differ".into(),
            ));
        }
        for (a, b) in self.records_a.iter().zip(&self.records_b) {
            if a.len() != self.config.record_len || b.len() != self.config.record_len {
                return Err(ChainError::Config("record length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Apply the detection bandwidth to every record: digital down-conversion
    /// to baseband, 4th-order Butterworth low-pass at half the quoted
    /// (two-sided) bandwidth, and re-up-conversion so the stored format
    /// stays at the IF.
    pub fn filtered(&self, bandwidth_mhz: f64) -> IQTraceBatch {
        let lp = ButterworthLp::new(0.5 * bandwidth_mhz);
        let dt = self.config.dt_ns();
        let fif_ghz = self.config.f_if_mhz * 1e-3;
        let filt = |recs: &Vec<Vec<Complex32>>| -> Vec<Vec<Complex32>> {
            recs.iter()
                .map(|rec| {
                    let base: Vec<C64> = rec
                        .iter()
                        .enumerate()
                        .map(|(k, v)| {
                            let ph = -2.0 * PI * fif_ghz * k as f64 * dt;
                            C64::new(v.re as f64, v.im as f64) * C64::new(0.0, ph).exp()
                        })
                        .collect();
                    let low = lp.filter_complex(dt, &base);
                    low.iter()
                        .enumerate()
                        .map(|(k, v)| {
                            let ph = 2.0 * PI * fif_ghz * k as f64 * dt;
                            let y = v * C64::new(0.0, ph).exp();
                            Complex32::new(y.re as f32, y.im as f32)
                        })
                        .collect()
                })
                .collect()
        };
        IQTraceBatch {
            config: self.config,
            seed: self.seed,
            source_label: self.source_label.clone(),
            records_a: filt(&self.records_a),
            records_b: filt(&self.records_b),
        }
    }
}

/// Pulse-slot schedule inside a record: pulse k is centered at
/// lead_in + k * period. The lead-in is half a period so the first filtered
/// pulse never touches the record start.
#[derive(Debug, Clone, Copy)]
pub struct RecordSchedule {
    pub count: usize,
    pub period_ns: f64,
    pub lead_in_ns: f64,
}

impl RecordSchedule {
    pub fn from_train(train: &PulseTrain) -> Self {
        Self {
            count: train.count,
            period_ns: train.period_ns,
            lead_in_ns: 0.5 * train.period_ns,
        }
    }
}

/// Deterministic per-record generator: record `idx` draws from ChaCha8
/// stream `idx` of `seed`, so generation order and parallelism never change
/// the data. Even `idx` is a signal record, odd a background record.
pub fn generate_record(
    cfg: &ChainConfig,
    src: &SourceSpec,
    sched: &RecordSchedule,
    seed: u64,
    idx: usize,
) -> (Vec<Complex32>, Vec<Complex32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx as u64);
    let is_signal = idx % 2 == 0;
    let n = cfg.record_len;
    let dt = cfg.dt_ns();
    let fif_ghz = cfg.f_if_mhz * 1e-3;

    // per-pulse amplitudes: deterministic for coherent/sim-mean, a
    // circularly-symmetric unit-variance Gaussian per pulse slot for thermal
    let amp_scale = src.mean_photon.sqrt();
    let mut pulse_amp = vec![C64::new(0.0, 0.0); sched.count];
    if is_signal {
        for a in pulse_amp.iter_mut() {
            *a = match src.kind {
                SourceKind::Coherent | SourceKind::SimMean => C64::new(amp_scale, 0.0),
                SourceKind::Thermal => {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im) * (0.5f64).sqrt() * amp_scale
                }
            };
        }
    } else if src.kind == SourceKind::Thermal {
        // keep the draw schedule aligned between signal and background
        for _ in 0..sched.count {
            let _: f64 = rng.sample(StandardNormal);
            let _: f64 = rng.sample(StandardNormal);
        }
    }

    let sigma_v = cfg.vacuum_var_per_sample().sqrt();
    let sigma_n = cfg.noise_var_per_sample().sqrt();
    let inv_sqrt2 = (0.5f64).sqrt();

    let mut a_out = Vec::with_capacity(n);
    let mut b_out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let mut s = C64::new(0.0, 0.0);
        if is_signal {
            // at most one pulse slot is live at any sample
            let slot = ((t - sched.lead_in_ns) / sched.period_ns).round();
            if slot >= 0.0 && (slot as usize) < sched.count {
                let center = sched.lead_in_ns + slot * sched.period_ns;
                let f = src.envelope.value_at(t - center);
                if f != C64::new(0.0, 0.0) {
                    s = pulse_amp[slot as usize] * f;
                }
            }
            if s != C64::new(0.0, 0.0) {
                let ph = 2.0 * PI * fif_ghz * t;
                s *= C64::new(0.0, ph).exp();
            }
        }
        let v = draw_cn(&mut rng, sigma_v);
        let xa = draw_cn(&mut rng, sigma_n);
        let xb = draw_cn(&mut rng, sigma_n);
        let sa = ((s + v) * inv_sqrt2 + xa) * cfg.gain;
        let sb = ((s - v) * inv_sqrt2 + xb) * cfg.gain;
        a_out.push(Complex32::new(sa.re as f32, sa.im as f32));
        b_out.push(Complex32::new(sb.re as f32, sb.im as f32));
    }
    (a_out, b_out)
}

#[inline]
fn draw_cn(rng: &mut ChaCha8Rng, sigma: f64) -> C64 {
    if sigma == 0.0 {
        // keep the draw schedule independent of the noise setting
        return C64::new(0.0, 0.0);
    }
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * sigma * (0.5f64).sqrt()
}

/// Synthesize `n_pairs` signal records, each followed by its background
/// record.
pub fn synthesize(
    cfg: &ChainConfig,
    src: &SourceSpec,
    train: &PulseTrain,
    n_pairs: usize,
    seed: u64,
) -> Result<IQTraceBatch, ChainError> {
    cfg.validate()?;
    let sched = RecordSchedule::from_train(train);
    let needed = sched.lead_in_ns + (sched.count - 1) as f64 * sched.period_ns
        + 0.5 * sched.period_ns;
    if cfg.record_span_ns() < needed {
        return Err(ChainError::Config(format!(
            "record_len {} ({} ns) does not cover the pulse train ({needed} ns)",
            cfg.record_len,
            cfg.record_span_ns()
        )));
    }
    let mut records_a = Vec::with_capacity(2 * n_pairs);
    let mut records_b = Vec::with_capacity(2 * n_pairs);
    for idx in 0..2 * n_pairs {
        let (a, b) = generate_record(cfg, src, &sched, seed, idx);
        records_a.push(a);
        records_b.push(b);
    }
    let batch = IQTraceBatch {
        config: *cfg,
        seed,
        source_label: src.kind.label().to_string(),
        records_a,
        records_b,
    };
    batch.validate()?;
    Ok(batch)
}
