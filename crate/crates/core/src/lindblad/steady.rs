//! Continuous-drive steady state of the two-level subsystem and the
//! emission-line reflection coefficient.
//!
//! Detuning here follows the spectroscopy convention delta = omega_d -
//! omega01 (the opposite sign of the pulse-engine Hamiltonian convention);
//! the reflection locus over a detuning sweep is a circle either way.

use super::LindbladError;
use crate::device::Rates;
use num_complex::Complex64 as C64;

fn check(r: &Rates) -> Result<(f64, f64), LindbladError> {
    let g1 = r.gamma1();
    let g2 = r.gamma2();
    if !(g1 > 0.0) || !(g2 > 0.0) {
        return Err(LindbladError::Domain(format!(
            "steady state needs positive rates, got gamma1 = {g1}, gamma2 = {g2}"
        )));
    }
    Ok((g1, g2))
}

/// Steady-state <sigma^-> under a continuous drive of Rabi frequency `omega`
/// at detuning `delta` (both rad/us):
///
/// <sigma^-> = -i (Omega / 2 Gamma2) (1 - i delta/Gamma2)
///             / (1 + (delta/Gamma2)^2 + Omega^2/(Gamma1 Gamma2))
pub fn steady_state_sigma_minus(
    r: &Rates,
    omega: f64,
    delta: f64,
) -> Result<C64, LindbladError> {
    let (g1, g2) = check(r)?;
    let u = delta / g2;
    let sat = 1.0 + u * u + omega * omega / (g1 * g2);
    let num = C64::new(1.0, -u);
    Ok(C64::new(0.0, -omega / (2.0 * g2)) * num / sat)
}

/// Reflection coefficient in the emission line:
///
/// r_e = 1 - (Gamma1e/Gamma2) (1 - i delta/Gamma2)
///           / (1 + (delta/Gamma2)^2 + Omega^2/(Gamma1 Gamma2))
///
/// In the weak-drive limit the locus over delta is a circle of radius
/// eta' = Gamma1e/(2 Gamma2) centered at 1 - eta'.
pub fn reflection(r: &Rates, omega: f64, delta: f64) -> Result<C64, LindbladError> {
    let (g1, g2) = check(r)?;
    let u = delta / g2;
    let sat = 1.0 + u * u + omega * omega / (g1 * g2);
    Ok(C64::new(1.0, 0.0) - C64::new(r.gamma1_e / g2, 0.0) * C64::new(1.0, -u) / sat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units;
    use approx::assert_relative_eq;

    fn ideal() -> Rates {
        Rates::from_mhz(7.0, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn weak_drive_linear_response() {
        let r = ideal();
        let g2 = r.gamma2();
        let omega = 1e-6 * g2;
        let s = steady_state_sigma_minus(&r, omega, 0.0).unwrap();
        let expected = C64::new(0.0, -omega / (2.0 * g2));
        assert!((s - expected).norm() / expected.norm() < 1e-9);
    }

    #[test]
    fn saturation_kills_the_dipole() {
        let r = ideal();
        let s = steady_state_sigma_minus(&r, 1e9, 0.0).unwrap();
        assert!(s.norm() < 1e-6);
        let re = reflection(&r, 1e9, 0.0).unwrap();
        assert!((re - C64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn ideal_source_reflects_minus_one_on_resonance() {
        let r = ideal();
        let re = reflection(&r, 1e-9, 0.0).unwrap();
        assert_relative_eq!(re.re, -1.0, max_relative = 1e-9);
        assert!(re.im.abs() < 1e-12);
    }

    #[test]
    fn weak_drive_locus_is_a_circle_of_radius_eta_prime() {
        let r = Rates::from_mhz(7.02, 0.05, 0.02, 0.03).unwrap();
        let g2 = r.gamma2();
        let omega = 1e-5 * g2;
        let center_expected = 1.0 - r.eta_prime();
        for k in -20..=20 {
            let delta = k as f64 * 0.3 * g2;
            let re = reflection(&r, omega, delta).unwrap();
            let rad = (re - C64::new(center_expected, 0.0)).norm();
            assert!(
                (rad - r.eta_prime()).abs() < 1e-6,
                "delta = {delta}: radius {rad} vs {}",
                r.eta_prime()
            );
        }
    }

    #[test]
    fn reflection_consistent_with_dipole() {
        // r_e = 1 - i * (2 Gamma1e / Omega) * <sigma->  for any drive
        let r = Rates::from_mhz(6.5, 0.3, 0.1, 0.2).unwrap();
        let omega = units::mhz_to_rad_per_us(2.0);
        for k in [-3.0, -0.5, 0.0, 1.0, 4.0] {
            let delta = units::mhz_to_rad_per_us(k);
            let s = steady_state_sigma_minus(&r, omega, delta).unwrap();
            let re = reflection(&r, omega, delta).unwrap();
            let re_from_s = C64::new(1.0, 0.0)
                - C64::new(0.0, 2.0 * r.gamma1_e / omega) * s;
            assert!((re - re_from_s).norm() < 1e-12);
        }
    }
}
