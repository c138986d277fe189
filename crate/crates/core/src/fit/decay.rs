//! Exponential decay-envelope fits on emission records.
//!
//! Amplitude decay of a theta_r = pi/2 record gives Gamma2; power decay of a
//! theta_r = pi record gives Gamma1. The window must start after the drive
//! and span at least two decay constants with at least ten points.

use super::lm::{levenberg_marquardt, FitError, LmOptions, LsqModel};
use super::{FitParam, FitReport};
use crate::lindblad::EmissionRecord;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Amplitude,
    Power,
}

#[derive(Debug, Clone, Copy)]
pub struct DecayWindow {
    pub start_ns: f64,
    pub end_ns: f64,
}

struct ExpModel<'a> {
    t: &'a [f64],
    y: &'a [f64],
}

impl LsqModel for ExpModel<'_> {
    fn n_residuals(&self) -> usize {
        self.t.len()
    }
    fn n_params(&self) -> usize {
        2
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for (i, (&t, &y)) in self.t.iter().zip(self.y).enumerate() {
            out[i] = p[0] * (-p[1] * t).exp() - y;
        }
    }
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) -> bool {
        for (i, &t) in self.t.iter().enumerate() {
            let e = (-p[1] * t).exp();
            out[(i, 0)] = e;
            out[(i, 1)] = -p[0] * t * e;
        }
        true
    }
}

/// Fit A e^{-Gamma t} to the chosen envelope inside the window and return
/// the rate Gamma (rad/ns equivalent, i.e. 1/ns) with its 1-sigma error.
pub fn fit_decay(
    rec: &EmissionRecord,
    kind: DecayKind,
    window: DecayWindow,
) -> Result<(FitReport, f64, f64), FitError> {
    if window.start_ns < rec.drive_end_ns {
        return Err(FitError::Window(format!(
            "window starts at {} ns but the drive ends at {} ns",
            window.start_ns, rec.drive_end_ns
        )));
    }
    if window.end_ns <= window.start_ns {
        return Err(FitError::Window("empty window".into()));
    }
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (k, &tk) in rec.times_ns.iter().enumerate() {
        if tk < window.start_ns || tk > window.end_ns {
            continue;
        }
        let v = match kind {
            DecayKind::Amplitude => rec.amp[k].norm(),
            DecayKind::Power => rec.power[k],
        };
        if v > 0.0 {
            t.push(tk - window.start_ns);
            y.push(v);
        }
    }
    if t.len() < 10 {
        return Err(FitError::Window(format!(
            "only {} usable points in the window, need 10",
            t.len()
        )));
    }

    // log-linear initialization, then a proper nonlinear refinement
    let n = t.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (&tk, &yk) in t.iter().zip(&y) {
        let ly = yk.ln();
        st += tk;
        sy += ly;
        stt += tk * tk;
        sty += tk * ly;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-30 {
        return Err(FitError::DegenerateData("window has no time spread".into()));
    }
    let slope = (n * sty - st * sy) / denom;
    let rate0 = (-slope).max(1e-9);
    let a0 = ((sy - slope * st) / n).exp();

    let span = t[t.len() - 1] - t[0];
    if span * rate0 < 2.0 {
        return Err(FitError::Window(format!(
            "window spans {:.2} decay constants, need 2",
            span * rate0
        )));
    }

    let model = ExpModel { t: &t, y: &y };
    let res = levenberg_marquardt(&model, &[a0, rate0], &LmOptions::default())?;
    let rate = res.params[1];
    let sigma = res.sigmas[1];
    let report = FitReport {
        model: "exp-decay: y = A exp(-Gamma t)",
        params: vec![
            FitParam { name: "amplitude".into(), value: res.params[0], sigma: res.sigmas[0] },
            FitParam { name: "rate_per_ns".into(), value: rate, sigma },
        ],
        residual_norm: res.residual_norm,
        iterations: res.iterations,
        converged: res.converged,
        notes: vec![format!("{} points, window {}..{} ns", t.len(), window.start_ns, window.end_ns)],
    };
    Ok((report, rate, sigma))
}
