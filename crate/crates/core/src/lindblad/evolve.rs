//! Fixed-step RK4 integration of the time-dependent master equation.
//!
//! The step is dt = min(sigma/50, 0.02 / max(Gamma1, Omega0, |delta|, |alpha|))
//! and every public entry point runs a mandatory step-halving convergence
//! check; a 3x3 system is cheap enough that determinism beats adaptivity.

use super::{
    DensityMatrix3, LindbladError, SystemParams, C64, CONVERGENCE_TOL, M3,
};

/// Bound on automatic substep refinement when the convergence gate fails.
const MAX_REFINEMENTS: usize = 5;
use crate::device::{QubitParams, Rates};
use crate::pulse::{Pulse, PulseTrain};
use crate::units;

/// Drive envelope seen by the engine: amplitude in rad/ns vs absolute time.
pub trait Drive: Sync {
    fn omega_at(&self, t_ns: f64) -> f64;
    /// Peak amplitude, for the step-size rule.
    fn peak_amplitude(&self) -> f64;
    /// Detuning delta = omega01 - omega_d, rad/ns.
    fn detuning(&self) -> f64;
    /// Time before which the envelope is identically zero.
    fn drive_start_ns(&self) -> f64;
    /// Time after which the envelope is identically zero.
    fn drive_end_ns(&self) -> f64;
    /// Envelope width (Gaussian sigma) for the step-size rule.
    fn width_hint_ns(&self) -> f64;
}

impl Drive for Pulse {
    fn omega_at(&self, t_ns: f64) -> f64 {
        self.envelope(t_ns)
    }
    fn peak_amplitude(&self) -> f64 {
        self.omega0.abs()
    }
    fn detuning(&self) -> f64 {
        self.detuning
    }
    fn drive_start_ns(&self) -> f64 {
        -self.half_window_ns()
    }
    fn drive_end_ns(&self) -> f64 {
        self.half_window_ns()
    }
    fn width_hint_ns(&self) -> f64 {
        self.sigma_ns
    }
}

impl Drive for PulseTrain {
    fn omega_at(&self, t_ns: f64) -> f64 {
        self.envelope(t_ns)
    }
    fn peak_amplitude(&self) -> f64 {
        self.pulse.omega0.abs()
    }
    fn detuning(&self) -> f64 {
        self.pulse.detuning
    }
    fn drive_start_ns(&self) -> f64 {
        -self.pulse.half_window_ns()
    }
    fn drive_end_ns(&self) -> f64 {
        (self.count - 1) as f64 * self.period_ns + self.pulse.half_window_ns()
    }
    fn width_hint_ns(&self) -> f64 {
        self.pulse.sigma_ns
    }
}

/// Uniform output grid t0 + k*dt for k in 0..n.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub t0_ns: f64,
    pub dt_ns: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0_ns: f64, dt_ns: f64, n: usize) -> Self {
        assert!(dt_ns > 0.0 && n >= 1);
        Self { t0_ns, dt_ns, n }
    }

    /// Grid spanning [t0, t1] with step at most `dt`, endpoint included.
    pub fn span(t0_ns: f64, t1_ns: f64, dt_ns: f64) -> Self {
        let n = ((t1_ns - t0_ns) / dt_ns).ceil() as usize + 1;
        Self::new(t0_ns, dt_ns, n.max(2))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.t0_ns + k as f64 * self.dt_ns).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.t0_ns + (self.n - 1) as f64 * self.dt_ns
    }
}

/// Grid covering the truncated pulse plus eight relaxation times of decay.
pub fn default_grid(r: &Rates, drive: &dyn Drive, dt_out_ns: f64) -> TimeGrid {
    let g1 = units::rad_per_us_to_rad_per_ns(r.gamma1());
    let end = drive.drive_end_ns() + 8.0 / g1;
    TimeGrid::span(drive.drive_start_ns(), end, dt_out_ns)
}

/// Integrator step from the design rule, ns.
pub fn integrator_step(sys: &SystemParams, drive: &dyn Drive) -> f64 {
    let sigma_ns = drive.width_hint_ns();
    let max_rate = sys
        .gamma1
        .max(drive.peak_amplitude())
        .max(drive.detuning().abs())
        .max(sys.anharm.abs());
    let by_rate = if max_rate > 0.0 { 0.02 / max_rate } else { f64::INFINITY };
    (sigma_ns / 50.0).min(by_rate)
}

/// Pre-sampled drive for fast repeated stepping: for each step the envelope
/// at its start, midpoint and end. Start/end samples are nudged one part in
/// 1e9 of a step into the interval so that a truncation edge landing on a
/// step boundary is seen one-sided; each step then integrates a smooth
/// envelope piece and RK4 keeps its order across the pulse window edges.
pub(crate) struct Stepper {
    sys: SystemParams,
    delta: f64,
    dt: f64,
    omega: Vec<[f64; 3]>,
}

impl Stepper {
    pub(crate) fn new(
        sys: &SystemParams,
        drive: &dyn Drive,
        t0: f64,
        n_steps: usize,
        dt: f64,
    ) -> Self {
        let nudge = 1e-9 * dt;
        let omega = (0..n_steps)
            .map(|k| {
                let t = t0 + k as f64 * dt;
                [
                    drive.omega_at(t + nudge),
                    drive.omega_at(t + 0.5 * dt),
                    drive.omega_at(t + dt - nudge),
                ]
            })
            .collect();
        Self {
            sys: *sys,
            delta: drive.detuning(),
            dt,
            omega,
        }
    }

    /// Classical RK4 step number `k` (from t0 + k*dt).
    #[inline]
    pub(crate) fn step(&self, k: usize, x: &M3) -> M3 {
        let [w0, wm, w1] = self.omega[k];
        let dt = self.dt;
        let half = C64::new(0.5 * dt, 0.0);
        let k1 = self.sys.rhs(w0, self.delta, x);
        let k2 = self.sys.rhs(wm, self.delta, &(x + k1 * half));
        let k3 = self.sys.rhs(wm, self.delta, &(x + k2 * half));
        let k4 = self.sys.rhs(w1, self.delta, &(x + k3 * C64::new(dt, 0.0)));
        x + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
    }
}

/// Propagate an arbitrary operator along the output grid with `n_sub`
/// integrator substeps per grid interval. No validity checks; quantum
/// regression propagates non-Hermitian operators through here too.
pub(crate) fn propagate_raw(
    sys: &SystemParams,
    drive: &dyn Drive,
    x0: M3,
    grid: &TimeGrid,
    n_sub: usize,
) -> Vec<M3> {
    let dt = grid.dt_ns / n_sub as f64;
    let n_steps = (grid.n - 1) * n_sub;
    let stepper = Stepper::new(sys, drive, grid.t0_ns, n_steps, dt);
    let mut out = Vec::with_capacity(grid.n);
    let mut x = x0;
    out.push(x);
    for i in 0..grid.n - 1 {
        for s in 0..n_sub {
            x = stepper.step(i * n_sub + s, &x);
        }
        out.push(x);
    }
    out
}

pub(crate) fn substeps_for(grid_dt: f64, dt_int: f64) -> usize {
    (grid_dt / dt_int).ceil().max(1.0) as usize
}

/// Density-matrix trajectory on an output grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times_ns: Vec<f64>,
    pub states: Vec<DensityMatrix3>,
    /// End of the drive window; decay fits must start after this.
    pub drive_end_ns: f64,
}

impl Trajectory {
    pub fn validate(&self) -> Result<(), LindbladError> {
        for (t, s) in self.times_ns.iter().zip(&self.states) {
            s.validate().map_err(|e| {
                LindbladError::Invariant(format!("at t = {t} ns: {e}"))
            })?;
        }
        Ok(())
    }
}

/// Integrate the master equation for `drive` starting from `rho0` at the
/// first grid point. Runs the mandatory step-halving convergence check and
/// validates every output state.
pub fn evolve(
    q: &QubitParams,
    r: &Rates,
    drive: &dyn Drive,
    rho0: &DensityMatrix3,
    grid: &TimeGrid,
) -> Result<Trajectory, LindbladError> {
    let sys = SystemParams::from_device(q, r);
    evolve_sys(&sys, drive, rho0, grid, true)
}

/// As [`evolve`] but without the step-halving check; used inside parameter
/// sweeps that gate convergence once for the whole sweep.
pub fn evolve_unchecked(
    q: &QubitParams,
    r: &Rates,
    drive: &dyn Drive,
    rho0: &DensityMatrix3,
    grid: &TimeGrid,
) -> Result<Trajectory, LindbladError> {
    let sys = SystemParams::from_device(q, r);
    evolve_sys(&sys, drive, rho0, grid, false)
}

pub(crate) fn evolve_sys(
    sys: &SystemParams,
    drive: &dyn Drive,
    rho0: &DensityMatrix3,
    grid: &TimeGrid,
    check: bool,
) -> Result<Trajectory, LindbladError> {
    let dt_int = integrator_step(sys, drive);
    let mut n_sub = substeps_for(grid.dt_ns, dt_int);
    let states = if check {
        // mandatory step-halving gate; refine when a pulse edge off the
        // substep lattice degrades the order
        let mut coarse = propagate_raw(sys, drive, *rho0.matrix(), grid, n_sub);
        let mut result = None;
        for _ in 0..MAX_REFINEMENTS {
            let fine = propagate_raw(sys, drive, *rho0.matrix(), grid, 2 * n_sub);
            let residual = max_deviation(&coarse, &fine);
            if residual <= CONVERGENCE_TOL {
                result = Some(fine);
                break;
            }
            coarse = fine;
            n_sub *= 2;
        }
        match result {
            Some(states) => states,
            None => {
                let fine = propagate_raw(sys, drive, *rho0.matrix(), grid, 2 * n_sub);
                let residual = max_deviation(&coarse, &fine);
                return Err(LindbladError::Integration {
                    residual,
                    tol: CONVERGENCE_TOL,
                });
            }
        }
    } else {
        propagate_raw(sys, drive, *rho0.matrix(), grid, n_sub)
    };
    let traj = Trajectory {
        times_ns: grid.times(),
        states: states
            .into_iter()
            .map(DensityMatrix3::from_matrix_unchecked)
            .collect(),
        drive_end_ns: drive.drive_end_ns(),
    };
    traj.validate()?;
    Ok(traj)
}

/// Step-halving residual at the design-rule step: the largest change of any
/// density-matrix element when the integrator substep is halved. The
/// convergence gate requires this to be below 1e-6.
pub fn convergence_residual(
    q: &QubitParams,
    r: &Rates,
    drive: &dyn Drive,
    rho0: &DensityMatrix3,
    grid: &TimeGrid,
) -> f64 {
    let sys = SystemParams::from_device(q, r);
    let dt_int = integrator_step(&sys, drive);
    let n_sub = substeps_for(grid.dt_ns, dt_int);
    let coarse = propagate_raw(&sys, drive, *rho0.matrix(), grid, n_sub);
    let fine = propagate_raw(&sys, drive, *rho0.matrix(), grid, 2 * n_sub);
    max_deviation(&coarse, &fine)
}

pub(crate) fn max_deviation(a: &[M3], b: &[M3]) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((x[(i, j)] - y[(i, j)]).norm());
            }
        }
    }
    worst
}

/// Input-output observables of a trajectory: quadrature amplitude
/// <a(t)> = sqrt(Gamma1) rho10(t) and power <a+a>(t) = Gamma1 rho11(t),
/// both in emission photon-flux units (1/ns).
#[derive(Debug, Clone)]
pub struct EmissionRecord {
    pub times_ns: Vec<f64>,
    pub amp: Vec<C64>,
    pub power: Vec<f64>,
    pub populations: [Vec<f64>; 3],
    pub drive_end_ns: f64,
}

impl EmissionRecord {
    /// power >= 0 and |amp|^2 <= power (Cauchy-Schwarz on the 0-1 block).
    pub fn validate(&self) -> Result<(), LindbladError> {
        for k in 0..self.power.len() {
            if self.power[k] < -1e-12 {
                return Err(LindbladError::Invariant(format!(
                    "negative power {} at index {k}",
                    self.power[k]
                )));
            }
            let a2 = self.amp[k].norm_sqr();
            if a2 > self.power[k] + 1e-8 {
                return Err(LindbladError::Invariant(format!(
                    "|amp|^2 = {a2} exceeds power = {} at index {k}",
                    self.power[k]
                )));
            }
        }
        Ok(())
    }
}

pub fn emission_observables(traj: &Trajectory, r: &Rates) -> EmissionRecord {
    let g1 = units::rad_per_us_to_rad_per_ns(r.gamma1());
    let sg1 = g1.sqrt();
    let n = traj.states.len();
    let mut amp = Vec::with_capacity(n);
    let mut power = Vec::with_capacity(n);
    let mut pops = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for s in &traj.states {
        amp.push(s.element(1, 0) * C64::new(sg1, 0.0));
        power.push(g1 * s.population(1));
        for k in 0..3 {
            pops[k].push(s.population(k));
        }
    }
    EmissionRecord {
        times_ns: traj.times_ns.clone(),
        amp,
        power,
        populations: pops,
        drive_end_ns: traj.drive_end_ns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::QubitParams;

    fn paper_setup() -> (QubitParams, Rates) {
        (
            QubitParams::new(16.8, 0.415, 0.0).unwrap(),
            Rates::from_mhz(7.02, 0.0, 0.0, 0.03).unwrap(),
        )
    }

    #[test]
    fn free_decay_is_exponential() {
        let (q, r) = paper_setup();
        let p = Pulse::gaussian(2.0, 0.0);
        let grid = TimeGrid::span(0.0, 150.0, 0.5);
        let traj = evolve(&q, &r, &p, &DensityMatrix3::pure(1), &grid).unwrap();
        let g1 = units::rad_per_us_to_rad_per_ns(r.gamma1());
        for (t, s) in traj.times_ns.iter().zip(&traj.states) {
            let expected = (-g1 * t).exp();
            let got = s.population(1);
            assert!(
                (got - expected).abs() / expected.max(1e-12) < 1e-6,
                "t={t}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn pi_pulse_leaves_reported_leakage_and_preparation() {
        let (q, r) = paper_setup();
        let p = Pulse::gaussian(2.0, 1.0)
            .with_rabi_angle(std::f64::consts::PI)
            .unwrap();
        let grid = TimeGrid::span(-p.half_window_ns(), 60.0, 0.25);
        let traj = evolve(&q, &r, &p, &DensityMatrix3::ground(), &grid).unwrap();
        // read out at the preparation time: the maximum of rho11, which is
        // where the emitted power peaks
        let (mut p1_max, mut p2_at_prep) = (0.0f64, 0.0f64);
        for s in &traj.states {
            if s.population(1) > p1_max {
                p1_max = s.population(1);
                p2_at_prep = s.population(2);
            }
        }
        assert!((p2_at_prep - 0.003).abs() < 1e-3, "p2 = {p2_at_prep}");
        assert!((p1_max - 0.88).abs() < 0.02, "p1_max = {p1_max}");
    }

    #[test]
    fn emission_record_invariants_hold() {
        let (q, r) = paper_setup();
        let p = Pulse::gaussian(2.0, 1.0)
            .with_rabi_angle(std::f64::consts::PI / 2.0)
            .unwrap();
        let grid = default_grid(&r, &p, 0.5);
        let traj = evolve(&q, &r, &p, &DensityMatrix3::ground(), &grid).unwrap();
        let rec = emission_observables(&traj, &r);
        rec.validate().unwrap();
        // theta_r = 0 gives a silent record
        let p0 = Pulse::gaussian(2.0, 0.0);
        let traj = evolve(&q, &r, &p0, &DensityMatrix3::ground(), &grid).unwrap();
        let rec = emission_observables(&traj, &r);
        assert!(rec.amp.iter().all(|a| a.norm() == 0.0));
        assert!(rec.power.iter().all(|&p| p == 0.0));
    }
}
