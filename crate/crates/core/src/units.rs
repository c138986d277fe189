//! Unit conventions and the single conversion boundary.
//!
//! Internally all decoherence rates are angular frequencies in rad/us. The
//! time-domain engine ([`crate::lindblad`]) works in ns and rad/ns. Every
//! user-facing number (config files, CSV headers, CLI output) is cyclic
//! MHz/GHz. Convert with the helpers below instead of sprinkling 2*pi
//! factors through the code.

use std::f64::consts::PI;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;

/// Cyclic MHz to angular rad/us.
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz
}

/// Angular rad/us to cyclic MHz.
pub fn rad_per_us_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Cyclic GHz to angular rad/ns.
pub fn ghz_to_rad_per_ns(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz
}

/// rad/us to rad/ns (engine time base).
pub fn rad_per_us_to_rad_per_ns(w: f64) -> f64 {
    w * 1e-3
}

/// rad/ns to rad/us.
pub fn rad_per_ns_to_rad_per_us(w: f64) -> f64 {
    w * 1e3
}

/// Power in dBm to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Photon flux (photons/us) carried by `watt` at a carrier of `carrier_ghz`.
pub fn watt_to_photons_per_us(watt: f64, carrier_ghz: f64) -> f64 {
    watt / (HBAR * 2.0 * PI * carrier_ghz * 1e9) * 1e-6
}

/// Thermal occupancy of a mode at `temp_k` and `carrier_ghz` in the
/// Rayleigh-Jeans limit kB*T >> hbar*omega, i.e. added noise quanta per unit
/// bandwidth-time. Used to calibrate synthetic amplifier noise.
pub fn noise_quanta(temp_k: f64, carrier_ghz: f64) -> f64 {
    KB * temp_k / (HBAR * 2.0 * PI * carrier_ghz * 1e9)
}
