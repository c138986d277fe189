//! Run configuration: a UTF-8 `key = value` file with unit suffixes and
//! `[section]` headers, e.g.
//!
//! ```text
//! seed = 12345
//! [device]
//! ec = 415 MHz
//! [rates]
//! gamma1_e = 7.02 MHz
//! ```
//!
//! Frequencies and rates are written as cyclic Hz/kHz/MHz/GHz and converted
//! at this boundary (rates to angular rad/us, device energies to GHz).
//! Unknown keys are errors; every value starts from the paper-default
//! parameter set and can be overridden.

use crate::chain::ChainConfig;
use crate::correlator::{CorrConfig, KernelMode};
use crate::device::{FluxNoiseModel, QubitParams, Rates};
use crate::pulse::{Pulse, PulseTrain};
use crate::units;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config validation: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub qubit: QubitParams,
    pub noise: FluxNoiseModel,
    pub rates: Rates,
    /// Pulse with omega0 resolved from theta_r.
    pub pulse: Pulse,
    pub theta_r: f64,
    pub train_count: usize,
    pub train_period_ns: f64,
    pub chain: ChainConfig,
    pub corr: CorrConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    /// Paper-default parameters: the fitted rates Gamma1/2pi = 7.02 MHz,
    /// Gamma2/2pi = 3.54 MHz (gamma = Gamma2 - Gamma1/2), the sigma = 2 ns
    /// truncated-Gaussian pi pulse, and the 16 x 512 ns train.
    fn default() -> Self {
        let rates = Rates::from_mhz(7.02, 0.0, 0.0, 0.03).unwrap();
        let pulse = Pulse::gaussian(2.0, 1.0)
            .with_rabi_angle(std::f64::consts::PI)
            .unwrap();
        Self {
            qubit: QubitParams::new(16.8, 0.415, 0.0).unwrap(),
            noise: FluxNoiseModel::default(),
            rates,
            pulse,
            theta_r: std::f64::consts::PI,
            train_count: 16,
            train_period_ns: 512.0,
            chain: ChainConfig::default(),
            corr: CorrConfig::default(),
            seed: 20260810,
        }
    }
}

impl RunConfig {
    pub fn train(&self) -> PulseTrain {
        PulseTrain::new(self.pulse, self.train_count, self.train_period_ns).unwrap()
    }

    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        let mut theta_r = cfg.theta_r;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Parse {
                line: lineno + 1,
                msg,
            };
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err("unterminated section header".into()))?;
                section = name.trim().to_lowercase();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let key = key.trim().to_lowercase();
            let value = value.trim();
            apply_key(&mut cfg, &mut theta_r, &section, &key, value)
                .map_err(|msg| err(msg))?;
        }
        cfg.theta_r = theta_r;
        cfg.pulse = cfg
            .pulse
            .with_rabi_angle(theta_r)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |e: String| ConfigError::Invalid(e);
        QubitParams::new(self.qubit.ej_max_ghz, self.qubit.ec_ghz, self.qubit.flux)
            .map_err(|e| bad(e.to_string()))?;
        Rates::new(
            self.rates.gamma1_e,
            self.rates.gamma1_c,
            self.rates.gamma1_n,
            self.rates.gamma_phi,
        )
        .map_err(|e| bad(e.to_string()))?;
        FluxNoiseModel::new(self.noise.a_phi_sqrt, self.noise.zeta)
            .map_err(|e| bad(e.to_string()))?;
        Pulse::new(
            self.pulse.sigma_ns,
            self.pulse.omega0,
            self.pulse.truncation,
            self.pulse.detuning,
        )
        .map_err(|e| bad(e.to_string()))?;
        PulseTrain::new(self.pulse, self.train_count, self.train_period_ns)
            .map_err(|e| bad(e.to_string()))?;
        self.chain.validate().map_err(|e| bad(e.to_string()))?;
        if self.corr.tau_max == 0 {
            return Err(bad("tau_max must be positive".into()));
        }
        // warn-level invariant from the train type: the qubit must re-ground
        let g1_ns = units::rad_per_us_to_rad_per_ns(self.rates.gamma1());
        if !self.train().period_is_safe(g1_ns) {
            return Err(bad(format!(
                "train period {} ns is shorter than 10/Gamma1 = {:.1} ns",
                self.train_period_ns,
                10.0 / g1_ns
            )));
        }
        Ok(())
    }

    /// The canonical key = value rendering (also the CSV header block).
    pub fn summary_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("ej_max".into(), format!("{} GHz", self.qubit.ej_max_ghz)),
            ("ec".into(), format!("{} GHz", self.qubit.ec_ghz)),
            ("flux".into(), format!("{}", self.qubit.flux)),
            ("lambda_12".into(), format!("{}", self.qubit.lambda_12)),
            ("zeta".into(), format!("{}", self.noise.zeta)),
            ("a_phi_sqrt".into(), format!("{}", self.noise.a_phi_sqrt)),
            (
                "gamma1_e".into(),
                format!("{} MHz", units::rad_per_us_to_mhz(self.rates.gamma1_e)),
            ),
            (
                "gamma1_c".into(),
                format!("{} MHz", units::rad_per_us_to_mhz(self.rates.gamma1_c)),
            ),
            (
                "gamma1_n".into(),
                format!("{} MHz", units::rad_per_us_to_mhz(self.rates.gamma1_n)),
            ),
            (
                "gamma_phi".into(),
                format!("{} MHz", units::rad_per_us_to_mhz(self.rates.gamma_phi)),
            ),
            (
                "gamma1".into(),
                format!("{} MHz", units::rad_per_us_to_mhz(self.rates.gamma1())),
            ),
            (
                "gamma2".into(),
                format!("{} MHz", units::rad_per_us_to_mhz(self.rates.gamma2())),
            ),
            ("sigma".into(), format!("{} ns", self.pulse.sigma_ns)),
            ("truncation".into(), format!("{}", self.pulse.truncation)),
            ("theta_r".into(), format!("{}", self.theta_r)),
            ("train_count".into(), format!("{}", self.train_count)),
            ("train_period".into(), format!("{} ns", self.train_period_ns)),
            ("f_if".into(), format!("{} MHz", self.chain.f_if_mhz)),
            ("fs".into(), format!("{} MSps", self.chain.fs_msps)),
            ("record_len".into(), format!("{}", self.chain.record_len)),
            ("noise_temp".into(), format!("{} K", self.chain.noise_temp_k)),
            ("gain".into(), format!("{}", self.chain.gain)),
            ("carrier".into(), format!("{} GHz", self.chain.carrier_ghz)),
            ("vacuum".into(), format!("{}", self.chain.vacuum_noise)),
            ("tau_max".into(), format!("{}", self.corr.tau_max)),
            ("seed".into(), format!("{}", self.seed)),
        ]
    }
}

fn apply_key(
    cfg: &mut RunConfig,
    theta_r: &mut f64,
    section: &str,
    key: &str,
    value: &str,
) -> Result<(), String> {
    match (section, key) {
        ("", "seed") => cfg.seed = parse_int(value)? as u64,
        ("device", "ej_max") => cfg.qubit.ej_max_ghz = parse_freq_ghz(value)?,
        ("device", "ec") => cfg.qubit.ec_ghz = parse_freq_ghz(value)?,
        ("device", "flux") => cfg.qubit.flux = parse_plain(value)?,
        ("device", "lambda_12") => cfg.qubit.lambda_12 = parse_plain(value)?,
        ("noise", "zeta") => cfg.noise.zeta = parse_plain(value)?,
        ("noise", "a_phi_sqrt") => cfg.noise.a_phi_sqrt = parse_plain(value)?,
        ("rates", "gamma1_e") => cfg.rates.gamma1_e = parse_rate_rad_us(value)?,
        ("rates", "gamma1_c") => cfg.rates.gamma1_c = parse_rate_rad_us(value)?,
        ("rates", "gamma1_n") => cfg.rates.gamma1_n = parse_rate_rad_us(value)?,
        ("rates", "gamma_phi") => cfg.rates.gamma_phi = parse_rate_rad_us(value)?,
        ("pulse", "sigma") => cfg.pulse.sigma_ns = parse_time_ns(value)?,
        ("pulse", "truncation") => cfg.pulse.truncation = parse_plain(value)?,
        ("pulse", "theta_r") => *theta_r = parse_plain(value)?,
        ("pulse", "detuning") => {
            cfg.pulse.detuning = units::rad_per_us_to_rad_per_ns(parse_rate_rad_us(value)?)
        }
        ("train", "count") => cfg.train_count = parse_int(value)? as usize,
        ("train", "period") => cfg.train_period_ns = parse_time_ns(value)?,
        ("chain", "f_if") => cfg.chain.f_if_mhz = parse_freq_ghz(value)? * 1e3,
        ("chain", "fs") => cfg.chain.fs_msps = parse_sample_rate_msps(value)?,
        ("chain", "record_len") => cfg.chain.record_len = parse_int(value)? as usize,
        ("chain", "noise_temp") => cfg.chain.noise_temp_k = parse_kelvin(value)?,
        ("chain", "gain") => cfg.chain.gain = parse_plain(value)?,
        ("chain", "carrier") => cfg.chain.carrier_ghz = parse_freq_ghz(value)?,
        ("chain", "vacuum") => cfg.chain.vacuum_noise = parse_plain(value)?,
        ("correlator", "tau_max") => cfg.corr.tau_max = parse_int(value)? as usize,
        ("correlator", "chunk") => cfg.corr.chunk_records = parse_int(value)? as usize,
        ("correlator", "workers") => cfg.corr.workers = parse_int(value)? as usize,
        ("correlator", "kernel") => {
            cfg.corr.kernel = match value {
                "auto" => KernelMode::Auto,
                "direct" => KernelMode::Direct,
                "fft" => KernelMode::Fft,
                other => return Err(format!("unknown kernel {other:?}")),
            }
        }
        _ => {
            return Err(format!(
                "unknown key {key:?} in section {section:?}"
            ))
        }
    }
    Ok(())
}

fn split_unit(value: &str) -> (&str, &str) {
    match value.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        Some(pos) => (value[..pos].trim(), value[pos..].trim()),
        None => (value.trim(), ""),
    }
}

fn parse_plain(value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|e| format!("bad number {value:?}: {e}"))
}

fn parse_int(value: &str) -> Result<i64, String> {
    value
        .parse::<i64>()
        .map_err(|e| format!("bad integer {value:?}: {e}"))
}

/// Cyclic frequency with unit suffix, canonicalized to GHz.
fn parse_freq_ghz(value: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(value);
    let x = parse_plain(num)?;
    let scale = match unit {
        "GHz" | "ghz" => 1.0,
        "MHz" | "mhz" => 1e-3,
        "kHz" | "khz" => 1e-6,
        "Hz" | "hz" => 1e-9,
        "" => return Err(format!("frequency {value:?} needs a unit (Hz/kHz/MHz/GHz)")),
        u => return Err(format!("unknown frequency unit {u:?}")),
    };
    Ok(x * scale)
}

/// Cyclic rate with frequency unit, canonicalized to angular rad/us.
fn parse_rate_rad_us(value: &str) -> Result<f64, String> {
    Ok(units::mhz_to_rad_per_us(parse_freq_ghz(value)? * 1e3))
}

fn parse_time_ns(value: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(value);
    let x = parse_plain(num)?;
    let scale = match unit {
        "ns" => 1.0,
        "ps" => 1e-3,
        "us" | "\u{b5}s" => 1e3,
        "ms" => 1e6,
        "s" => 1e9,
        "" => return Err(format!("time {value:?} needs a unit (ps/ns/us/ms/s)")),
        u => return Err(format!("unknown time unit {u:?}")),
    };
    Ok(x * scale)
}

fn parse_kelvin(value: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(value);
    let x = parse_plain(num)?;
    match unit {
        "K" | "k" | "" => Ok(x),
        "mK" | "mk" => Ok(x * 1e-3),
        u => Err(format!("unknown temperature unit {u:?}")),
    }
}

fn parse_sample_rate_msps(value: &str) -> Result<f64, String> {
    let (num, unit) = split_unit(value);
    let x = parse_plain(num)?;
    match unit {
        "MSps" | "msps" | "MS/s" | "MHz" => Ok(x),
        "GSps" | "gsps" | "GS/s" | "GHz" => Ok(x * 1e3),
        "" => Err(format!("sample rate {value:?} needs a unit (MSps/GSps)")),
        u => Err(format!("unknown sample-rate unit {u:?}")),
    }
}

/// The shipped default parameter file; kept in-repo so `reproduce` runs
/// without user input.
pub const DEFAULT_CONFIG_TEXT: &str = include_str!("../defaults.conf");
