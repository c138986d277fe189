//! Small dense Levenberg-Marquardt with Jacobian-based covariance.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("fit did not converge within {0} iterations")]
    Convergence(usize),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("bad fit window: {0}")]
    Window(String),
    #[error("fit input error: {0}")]
    Input(String),
}

/// Residual model. Implementors may provide an analytic Jacobian; otherwise
/// a central finite difference is used.
pub trait LsqModel {
    fn n_residuals(&self) -> usize;
    fn n_params(&self) -> usize;
    fn residuals(&self, p: &[f64], out: &mut [f64]);
    /// Fill the (n_residuals x n_params) Jacobian; return false to request
    /// the finite-difference fallback.
    fn jacobian(&self, _p: &[f64], _out: &mut DMatrix<f64>) -> bool {
        false
    }
}

pub struct LmOptions {
    pub max_iter: usize,
    pub gtol: f64,
    pub ftol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            gtol: 1e-10,
            ftol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// 1-sigma parameter uncertainties from the Jacobian covariance.
    pub sigmas: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn numeric_jacobian(model: &dyn LsqModel, p: &[f64], out: &mut DMatrix<f64>) {
    let m = model.n_residuals();
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let mut pw = p.to_vec();
    for j in 0..p.len() {
        let h = 1e-7 * p[j].abs().max(1e-7);
        pw[j] = p[j] + h;
        model.residuals(&pw, &mut hi);
        pw[j] = p[j] - h;
        model.residuals(&pw, &mut lo);
        pw[j] = p[j];
        for i in 0..m {
            out[(i, j)] = (hi[i] - lo[i]) / (2.0 * h);
        }
    }
}

pub fn levenberg_marquardt(
    model: &dyn LsqModel,
    p0: &[f64],
    opts: &LmOptions,
) -> Result<LmResult, FitError> {
    let m = model.n_residuals();
    let n = model.n_params();
    if m < n {
        return Err(FitError::Input(format!(
            "{m} residuals cannot constrain {n} parameters"
        )));
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    model.residuals(&p, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut jac = DMatrix::zeros(m, n);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        if !model.jacobian(&p, &mut jac) {
            numeric_jacobian(model, &p, &mut jac);
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &rv;
        if g.amax() < opts.gtol {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..25 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&g),
                None => match a.lu().solve(&g) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(v, s)| v - s).collect();
            let mut rt = vec![0.0; m];
            model.residuals(&trial, &mut rt);
            let new_cost: f64 = rt.iter().map(|v| v * v).sum();
            if new_cost.is_finite() && new_cost < cost {
                let rel_drop = (cost - new_cost) / cost.max(1e-300);
                p = trial;
                r = rt;
                cost = new_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel_drop < opts.ftol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved {
            // no downhill step found: either converged or stuck
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(FitError::Convergence(opts.max_iter));
    }

    if !model.jacobian(&p, &mut jac) {
        numeric_jacobian(model, &p, &mut jac);
    }
    let jtj = jac.transpose() * &jac;
    let dof = (m - n).max(1) as f64;
    let sigma2 = cost / dof;
    let covariance = match jtj.clone().try_inverse() {
        Some(inv) => inv * sigma2,
        None => DMatrix::from_element(n, n, f64::NAN),
    };
    let sigmas = (0..n).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    Ok(LmResult {
        params: p,
        sigmas,
        covariance,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
    })
}
