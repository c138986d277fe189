//! Two-time correlation functions by the quantum regression theorem.
//!
//! G1(t, tau) = Gamma1 <sigma10(t) sigma01(t+tau)>: propagate chi = rho(t) sigma10
//! over tau under the same generator and read Gamma1 * chi_{10}.
//!
//! G2(t, tau) = Gamma1^2 <sigma10(t) n(t+tau) sigma01(t)>: propagate
//! chi = sigma01 rho(t) sigma10 (a single (0,0) entry of weight rho11(t); the
//! trace factor is kept, never renormalized away) and read Gamma1^2 * chi_{11}.
//!
//! tau propagation runs through the same time-dependent drive, so a pulse
//! train automatically yields the re-excitation side peaks.

use super::evolve::{integrator_step, propagate_raw, substeps_for, Drive, Stepper, TimeGrid};
use super::filter::ButterworthLp;
use super::{LindbladError, SystemParams, C64, CONVERGENCE_TOL, M3};
use crate::device::{QubitParams, Rates};
use rayon::prelude::*;

/// Discretized G1(t, tau), G2(t, tau); t and tau grids share the step.
#[derive(Debug, Clone)]
pub struct TwoTimeGrid {
    pub t_ns: Vec<f64>,
    pub tau_ns: Vec<f64>,
    /// g1[i][j] = G1(t_i, tau_j), units 1/ns.
    pub g1: Vec<Vec<C64>>,
    /// g2[i][j] = G2(t_i, tau_j), units 1/ns^2.
    pub g2: Vec<Vec<f64>>,
}

impl TwoTimeGrid {
    /// g2 >= -tol everywhere and G1(t,0) equals <a+a>(t) by construction;
    /// both checked here.
    pub fn validate(&self, power: Option<&[f64]>) -> Result<(), LindbladError> {
        for row in &self.g2 {
            for &v in row {
                if v < -1e-10 {
                    return Err(LindbladError::Invariant(format!("g2 = {v} < 0")));
                }
            }
        }
        if let Some(p) = power {
            for (i, row) in self.g1.iter().enumerate() {
                if (row[0].re - p[i]).abs() > 1e-8 * p[i].abs().max(1.0)
                    || row[0].im.abs() > 1e-8
                {
                    return Err(LindbladError::Invariant(format!(
                        "G1(t,0) = {} but <a+a> = {}",
                        row[0], p[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// chi(0) = rho sigma10: column 0 receives rho's column 1.
fn chi_g1(rho: &M3) -> M3 {
    let mut x = M3::zeros();
    for i in 0..3 {
        x[(i, 0)] = rho[(i, 1)];
    }
    x
}

/// chi(0) = sigma01 rho sigma10 = rho11 |0><0|.
fn chi_g2(rho: &M3) -> M3 {
    let mut x = M3::zeros();
    x[(0, 0)] = rho[(1, 1)];
    x
}

pub fn two_time_correlations(
    q: &QubitParams,
    r: &Rates,
    drive: &dyn Drive,
    t_grid: &TimeGrid,
    tau_grid: &TimeGrid,
) -> Result<TwoTimeGrid, LindbladError> {
    let sys = SystemParams::from_device(q, r);
    two_time_sys(&sys, drive, t_grid, tau_grid, true)
}

pub(crate) fn two_time_sys(
    sys: &SystemParams,
    drive: &dyn Drive,
    t_grid: &TimeGrid,
    tau_grid: &TimeGrid,
    check: bool,
) -> Result<TwoTimeGrid, LindbladError> {
    if tau_grid.t0_ns != 0.0 {
        return Err(LindbladError::Domain("tau grid must start at 0".into()));
    }
    if (tau_grid.dt_ns - t_grid.dt_ns).abs() > 1e-12 {
        return Err(LindbladError::Domain(
            "t and tau grids must share the step".into(),
        ));
    }
    let g1_rate = sys.gamma1;
    let dt_int = integrator_step(sys, drive);
    let mut n_sub = substeps_for(t_grid.dt_ns, dt_int);

    if check {
        // gate the strongest row at half step before paying for the full
        // surface; refine if the change is above tolerance, relative to the
        // scale of the observables on that row
        let base = propagate_raw(sys, drive, ground(), t_grid, n_sub);
        let row = base
            .iter()
            .enumerate()
            .max_by(|a, b| {
                a.1[(1, 1)]
                    .re
                    .partial_cmp(&b.1[(1, 1)].re)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut converged = false;
        let mut coarse = compute_surface_row(sys, drive, t_grid, tau_grid, n_sub, g1_rate, row);
        let mut residual = f64::INFINITY;
        for _ in 0..5 {
            let fine = compute_surface_row(sys, drive, t_grid, tau_grid, 2 * n_sub, g1_rate, row);
            let mut scale: f64 = 1e-300;
            let mut dev: f64 = 0.0;
            for j in 0..tau_grid.n {
                scale = scale.max(coarse.0[j].norm()).max(coarse.1[j].abs());
                dev = dev
                    .max((coarse.0[j] - fine.0[j]).norm())
                    .max((coarse.1[j] - fine.1[j]).abs());
            }
            residual = dev / scale;
            if residual <= CONVERGENCE_TOL {
                converged = true;
                break;
            }
            coarse = fine;
            n_sub *= 2;
        }
        if !converged {
            return Err(LindbladError::Integration {
                residual,
                tol: CONVERGENCE_TOL,
            });
        }
    }
    Ok(compute_surface(sys, drive, t_grid, tau_grid, n_sub, g1_rate))
}

fn ground() -> M3 {
    let mut m = M3::zeros();
    m[(0, 0)] = C64::new(1.0, 0.0);
    m
}

fn compute_surface(
    sys: &SystemParams,
    drive: &dyn Drive,
    t_grid: &TimeGrid,
    tau_grid: &TimeGrid,
    n_sub: usize,
    g1_rate: f64,
) -> TwoTimeGrid {
    let base = propagate_raw(sys, drive, ground(), t_grid, n_sub);
    let dt = t_grid.dt_ns / n_sub as f64;
    // one drive table covers every row: row i starts at substep i*n_sub
    let total_steps = (t_grid.n - 1 + tau_grid.n - 1) * n_sub;
    let stepper = Stepper::new(sys, drive, t_grid.t0_ns, total_steps, dt);

    let rows: Vec<(Vec<C64>, Vec<f64>)> = (0..t_grid.n)
        .into_par_iter()
        .map(|i| propagate_row(&stepper, &base[i], i * n_sub, n_sub, tau_grid.n, g1_rate))
        .collect();

    let mut g1 = Vec::with_capacity(t_grid.n);
    let mut g2 = Vec::with_capacity(t_grid.n);
    for (a, b) in rows {
        g1.push(a);
        g2.push(b);
    }
    TwoTimeGrid {
        t_ns: t_grid.times(),
        tau_ns: tau_grid.times(),
        g1,
        g2,
    }
}

fn compute_surface_row(
    sys: &SystemParams,
    drive: &dyn Drive,
    t_grid: &TimeGrid,
    tau_grid: &TimeGrid,
    n_sub: usize,
    g1_rate: f64,
    row: usize,
) -> (Vec<C64>, Vec<f64>) {
    let base = propagate_raw(sys, drive, ground(), t_grid, n_sub);
    let dt = t_grid.dt_ns / n_sub as f64;
    let total_steps = (t_grid.n - 1 + tau_grid.n - 1) * n_sub;
    let stepper = Stepper::new(sys, drive, t_grid.t0_ns, total_steps, dt);
    propagate_row(&stepper, &base[row], row * n_sub, n_sub, tau_grid.n, g1_rate)
}

fn propagate_row(
    stepper: &Stepper,
    rho: &M3,
    step_offset: usize,
    n_sub: usize,
    n_tau: usize,
    g1_rate: f64,
) -> (Vec<C64>, Vec<f64>) {
    let mut x1 = chi_g1(rho);
    let mut x2 = chi_g2(rho);
    let mut g1 = Vec::with_capacity(n_tau);
    let mut g2 = Vec::with_capacity(n_tau);
    g1.push(x1[(1, 0)] * g1_rate);
    g2.push(x2[(1, 1)].re * g1_rate * g1_rate);
    for j in 0..n_tau - 1 {
        for s in 0..n_sub {
            let k = step_offset + j * n_sub + s;
            x1 = stepper.step(k, &x1);
            x2 = stepper.step(k, &x2);
        }
        g1.push(x1[(1, 0)] * g1_rate);
        g2.push(x2[(1, 1)].re * g1_rate * g1_rate);
    }
    (g1, g2)
}

/// Time-integrated correlation curves with optional detection filtering.
#[derive(Debug, Clone)]
pub struct IntegratedCorr {
    pub dt_ns: f64,
    pub tau_ns: Vec<f64>,
    /// integral over t of G1(t, t+tau), units dimensionless photon number.
    pub g1: Vec<C64>,
    /// integral over t of G2(t, t+tau), units 1/ns.
    pub g2: Vec<f64>,
}

/// Integrate a correlation surface over t (trapezoid rule), optionally
/// applying the detection bandwidth first. Filtering acts on the two
/// physical time arguments t1 = t and t2 = t + tau: the amplitude impulse
/// response on G1 and the intensity response on G2, in each argument.
/// `bandwidth_mhz` is the full two-sided detection bandwidth (low-pass
/// cutoff = bandwidth/2), matching [`super::filter::apply_detection_filter`].
pub fn integrated_correlations(
    surface: &TwoTimeGrid,
    bandwidth_mhz: Option<f64>,
) -> IntegratedCorr {
    let nt = surface.t_ns.len();
    let ntau = surface.tau_ns.len();
    let dt = if nt > 1 {
        surface.t_ns[1] - surface.t_ns[0]
    } else {
        1.0
    };

    let (h_amp, w_int) = match bandwidth_mhz {
        Some(bw) => {
            let lp = ButterworthLp::new(0.5 * bw);
            (lp.amplitude_kernel(dt), lp.intensity_kernel(dt))
        }
        None => (vec![1.0], vec![1.0]),
    };
    let pad = h_amp.len().max(w_int.len()) - 1;

    // rectangular (t1, t2) layout, symmetric completion below the diagonal
    let nrows = nt + pad;
    let ncols = nt + ntau - 1 + pad;
    let mut rect1 = vec![C64::new(0.0, 0.0); nrows * ncols];
    let mut rect2 = vec![0.0f64; nrows * ncols];
    for i in 0..nt {
        for k in 0..nt + ntau - 1 {
            let (v1, v2) = if k >= i && k - i < ntau {
                (surface.g1[i][k - i], surface.g2[i][k - i])
            } else if k < i && i - k < ntau && k < nt {
                (surface.g1[k][i - k].conj(), surface.g2[k][i - k])
            } else {
                (C64::new(0.0, 0.0), 0.0)
            };
            rect1[i * ncols + k] = v1;
            rect2[i * ncols + k] = v2;
        }
    }

    if bandwidth_mhz.is_some() {
        smooth_rows_c(&mut rect1, nrows, ncols, &h_amp);
        smooth_cols_c(&mut rect1, nrows, ncols, &h_amp);
        smooth_rows_r(&mut rect2, nrows, ncols, &w_int);
        smooth_cols_r(&mut rect2, nrows, ncols, &w_int);
    }

    // K(tau_j) = sum over t of the j-th superdiagonal, trapezoid weights in t
    let mut g1 = Vec::with_capacity(ntau);
    let mut g2 = Vec::with_capacity(ntau);
    for j in 0..ntau {
        let mut acc1 = C64::new(0.0, 0.0);
        let mut acc2 = 0.0;
        for i in 0..nrows {
            let k = i + j;
            if k >= ncols {
                break;
            }
            let w = if i == 0 || i == nrows - 1 { 0.5 } else { 1.0 };
            acc1 += rect1[i * ncols + k] * w;
            acc2 += rect2[i * ncols + k] * w;
        }
        g1.push(acc1 * dt);
        g2.push(acc2 * dt);
    }
    IntegratedCorr {
        dt_ns: dt,
        tau_ns: surface.tau_ns.clone(),
        g1,
        g2,
    }
}

fn smooth_rows_r(m: &mut [f64], nrows: usize, ncols: usize, kernel: &[f64]) {
    let mut buf = vec![0.0f64; ncols];
    for i in 0..nrows {
        let row = &m[i * ncols..(i + 1) * ncols];
        for (n, b) in buf.iter_mut().enumerate() {
            let kmax = kernel.len().min(n + 1);
            let mut acc = 0.0;
            for (u, &w) in kernel.iter().take(kmax).enumerate() {
                acc += w * row[n - u];
            }
            *b = acc;
        }
        m[i * ncols..(i + 1) * ncols].copy_from_slice(&buf);
    }
}

fn smooth_cols_r(m: &mut [f64], nrows: usize, ncols: usize, kernel: &[f64]) {
    let mut buf = vec![0.0f64; nrows];
    for k in 0..ncols {
        for (n, b) in buf.iter_mut().enumerate() {
            let kmax = kernel.len().min(n + 1);
            let mut acc = 0.0;
            for (u, &w) in kernel.iter().take(kmax).enumerate() {
                acc += w * m[(n - u) * ncols + k];
            }
            *b = acc;
        }
        for (n, &b) in buf.iter().enumerate() {
            m[n * ncols + k] = b;
        }
    }
}

fn smooth_rows_c(m: &mut [C64], nrows: usize, ncols: usize, kernel: &[f64]) {
    let mut buf = vec![C64::new(0.0, 0.0); ncols];
    for i in 0..nrows {
        let row = &m[i * ncols..(i + 1) * ncols];
        for (n, b) in buf.iter_mut().enumerate() {
            let kmax = kernel.len().min(n + 1);
            let mut acc = C64::new(0.0, 0.0);
            for (u, &w) in kernel.iter().take(kmax).enumerate() {
                acc += row[n - u] * w;
            }
            *b = acc;
        }
        m[i * ncols..(i + 1) * ncols].copy_from_slice(&buf);
    }
}

fn smooth_cols_c(m: &mut [C64], nrows: usize, ncols: usize, kernel: &[f64]) {
    let mut buf = vec![C64::new(0.0, 0.0); nrows];
    for k in 0..ncols {
        for (n, b) in buf.iter_mut().enumerate() {
            let kmax = kernel.len().min(n + 1);
            let mut acc = C64::new(0.0, 0.0);
            for (u, &w) in kernel.iter().take(kmax).enumerate() {
                acc += m[(n - u) * ncols + k] * w;
            }
            *b = acc;
        }
        for (n, &b) in buf.iter().enumerate() {
            m[n * ncols + k] = b;
        }
    }
}

/// Side-peak-normalized center value of a single-period correlation curve,
/// following the published estimator convention for an M-pulse record: the
/// center collects M pulse contributions while side peak n collects M - n
/// pulse pairs, and the normalization averages the raw side-peak heights of
/// every peak inside the analysis window (half the record, i.e. n up to
/// M/2 - 1) without pair-count correction. Heights are integrated over
/// +- period/4 windows like [`crate::correlator::normalize_g2`].
pub fn train_center_ratio(curve: &IntegratedCorr, period_ns: f64, pulses: usize) -> f64 {
    let dt = curve.dt_ns;
    let period = (period_ns / dt).round() as usize;
    let w = period / 4;
    let window = |c: usize| -> f64 {
        let lo = c.saturating_sub(w);
        let hi = (c + w).min(curve.g2.len() - 1);
        let mut s: f64 = curve.g2[lo..=hi].iter().sum();
        if c < w && curve.g2.len() > 1 {
            // K(-tau) = K(tau): fold the negative wing of the center window
            s += curve.g2[1..=(w - c).min(curve.g2.len() - 1)].iter().sum::<f64>();
        }
        s
    };
    let c1 = window(0);
    let s1 = window(period);
    let n_max = (pulses / 2).saturating_sub(1).max(1);
    let mean_side: f64 = (1..=n_max)
        .map(|n| (pulses - n) as f64 * s1)
        .sum::<f64>()
        / n_max as f64;
    pulses as f64 * c1 / mean_side
}

/// Center height K(0) and the side-peak height (maximum of K within
/// `search_ns` of `period_ns`), plus their ratio.
pub fn g2_center_side_ratio(
    curve: &IntegratedCorr,
    period_ns: f64,
    search_ns: f64,
) -> (f64, f64, f64) {
    let center = curve.g2[0];
    let mut side: f64 = 0.0;
    for (t, &v) in curve.tau_ns.iter().zip(&curve.g2) {
        if (t - period_ns).abs() <= search_ns {
            side = side.max(v);
        }
    }
    (center, side, center / side)
}
