//! Parameter extraction: reflection-sweep fits for eta', saturation fits,
//! exponential decay-envelope fits, and the normalization Monte Carlo.

pub mod decay;
pub mod lm;
pub mod reflection;
pub mod saturation;

pub use decay::{fit_decay, DecayKind, DecayWindow};
pub use lm::{FitError, LmOptions, LmResult, LsqModel};
pub use reflection::{fit_reflection, normalization_mc, McSpread, ReflectionFit, ReflectionSweep};
pub use saturation::fit_saturation;

use serde::Serialize;

/// One fitted parameter with its 1-sigma uncertainty.
#[derive(Debug, Clone, Serialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub sigma: f64,
}

/// Common fit summary. `model` identifies the exact model equation the
/// numbers refer to.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub model: &'static str,
    pub params: Vec<FitParam>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl FitReport {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// key = value lines for machine consumption.
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "model = {}\nconverged = {}\niterations = {}\nresidual_norm = {}\n",
            self.model, self.converged, self.iterations, self.residual_norm
        );
        for p in &self.params {
            s.push_str(&format!("{} = {}\n{}_sigma = {}\n", p.name, p.value, p.name, p.sigma));
        }
        s
    }
}
