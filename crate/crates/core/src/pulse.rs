//! Truncated-Gaussian drive pulses and pulse trains.
//!
//! A single pulse is centered at t = 0 with envelope
//! Omega(t) = Omega_0 exp(-t^2 / 2 sigma^2) on |t| <= truncation * sigma and
//! zero outside. The Rabi angle theta_r is the time integral of the envelope
//! over the truncated window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PulseError {
    #[error("invalid pulse: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Pulse {
    /// Gaussian width sigma, ns.
    pub sigma_ns: f64,
    /// Peak drive amplitude Omega_0, rad/ns.
    pub omega0: f64,
    /// Truncation half-window in units of sigma.
    pub truncation: f64,
    /// Drive detuning delta = omega01 - omega_d, rad/ns.
    pub detuning: f64,
}

impl Pulse {
    pub fn new(sigma_ns: f64, omega0: f64, truncation: f64, detuning: f64) -> Result<Self, PulseError> {
        if !(sigma_ns > 0.0) {
            return Err(PulseError::Invalid(format!("sigma must be > 0, got {sigma_ns}")));
        }
        if truncation < 2.0 {
            return Err(PulseError::Invalid(format!(
                "truncation must be >= 2 sigma, got {truncation}"
            )));
        }
        Ok(Self {
            sigma_ns,
            omega0,
            truncation,
            detuning,
        })
    }

    /// Resonant pulse with the default +-3 sigma truncation window.
    pub fn gaussian(sigma_ns: f64, omega0: f64) -> Self {
        Self::new(sigma_ns, omega0, 3.0, 0.0).unwrap()
    }

    /// Half window length, ns.
    pub fn half_window_ns(&self) -> f64 {
        self.truncation * self.sigma_ns
    }

    /// Full width at half maximum of the envelope, ns.
    pub fn t_fwhm_ns(&self) -> f64 {
        2.0 * self.sigma_ns * (2.0 * (2.0f64).ln()).sqrt()
    }

    /// Drive amplitude at time t (pulse centered at 0), rad/ns.
    pub fn envelope(&self, t_ns: f64) -> f64 {
        if t_ns.abs() > self.half_window_ns() {
            return 0.0;
        }
        let x = t_ns / self.sigma_ns;
        self.omega0 * (-0.5 * x * x).exp()
    }

    /// Rabi angle: numerical integral of the envelope over the truncated
    /// window (composite Simpson rule, 1 ps resolution).
    pub fn rabi_angle(&self) -> f64 {
        let w = self.half_window_ns();
        let n = ((2.0 * w / 1e-3).ceil() as usize).max(8);
        let n = n + n % 2; // Simpson needs an even interval count
        let h = 2.0 * w / n as f64;
        let mut acc = self.envelope(-w) + self.envelope(w);
        for k in 1..n {
            let t = -w + k as f64 * h;
            acc += self.envelope(t) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    /// Same pulse rescaled so that the Rabi angle equals `theta` (bisection
    /// on Omega_0; round-trips through `rabi_angle` to 1e-9).
    pub fn with_rabi_angle(&self, theta: f64) -> Result<Self, PulseError> {
        if theta < 0.0 {
            return Err(PulseError::Invalid(format!("theta must be >= 0, got {theta}")));
        }
        if theta == 0.0 {
            return Ok(Self { omega0: 0.0, ..*self });
        }
        let angle_of = |omega0: f64| Self { omega0, ..*self }.rabi_angle();
        // bracket the root
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while angle_of(hi) < theta {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(PulseError::Invalid("rabi angle target unreachable".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if angle_of(mid) < theta {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        Ok(Self {
            omega0: 0.5 * (lo + hi),
            ..*self
        })
    }
}

/// Periodic train of identical pulses. Pulse k is centered at k * period.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseTrain {
    pub pulse: Pulse,
    pub count: usize,
    pub period_ns: f64,
}

impl PulseTrain {
    pub fn new(pulse: Pulse, count: usize, period_ns: f64) -> Result<Self, PulseError> {
        if count == 0 || !(period_ns > 0.0) {
            return Err(PulseError::Invalid(
                "train needs count >= 1 and positive period".into(),
            ));
        }
        if period_ns < 2.0 * pulse.half_window_ns() {
            return Err(PulseError::Invalid(
                "train period shorter than the pulse window".into(),
            ));
        }
        Ok(Self {
            pulse,
            count,
            period_ns,
        })
    }

    /// True when the period is long enough for the qubit to re-ground
    /// between pulses. Callers emit a warning below 10/Gamma_1.
    pub fn period_is_safe(&self, gamma1_rad_ns: f64) -> bool {
        gamma1_rad_ns <= 0.0 || self.period_ns >= 10.0 / gamma1_rad_ns
    }

    /// Summed drive amplitude of all pulses at time t, rad/ns.
    pub fn envelope(&self, t_ns: f64) -> f64 {
        // pulses do not overlap (enforced in new), so at most one term is live
        let k = (t_ns / self.period_ns).round();
        if k < 0.0 || k >= self.count as f64 {
            // edge pulses may still reach into the neighbouring period
            let k = k.clamp(0.0, (self.count - 1) as f64);
            return self.pulse.envelope(t_ns - k * self.period_ns);
        }
        self.pulse.envelope(t_ns - k * self.period_ns)
    }
}
