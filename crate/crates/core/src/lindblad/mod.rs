//! Three-level Lindblad engine.
//!
//! The ladder system {|0>, |1>, |2>} is driven in the rotating frame of the
//! drive; the Hamiltonian is
//!
//! ```text
//!         [ 0          Omega/2              0          ]
//!  H(t) = [ Omega/2    delta            lambda Omega/2 ]
//!         [ 0          lambda Omega/2   alpha + 2 delta]
//! ```
//!
//! with delta = omega01 - omega_d and alpha the (negative) anharmonicity.
//! Relaxation uses the collapse operators sqrt(Gamma1) |0><1| and
//! sqrt(2 Gamma1) |1><2|. Pure dephasing uses sqrt(2 gamma) |1><1| and
//! sqrt(2 gamma) |2><2|, normalized so the 0-1 coherence decays at exactly
//! Gamma2 = Gamma1/2 + gamma, which is the convention every rate in this
//! crate is booked against.
//!
//! This module works in ns and rad/ns throughout; conversions from the
//! rad/us device layer happen in [`SystemParams::from_device`].

pub mod evolve;
pub mod filter;
pub mod qrt;
pub mod steady;

pub use evolve::{
    convergence_residual, default_grid, emission_observables, evolve, evolve_unchecked,
    EmissionRecord, TimeGrid, Trajectory,
};
pub use filter::{apply_detection_filter, ButterworthLp};
pub use qrt::{
    g2_center_side_ratio, integrated_correlations, train_center_ratio, two_time_correlations,
    IntegratedCorr, TwoTimeGrid,
};
pub use steady::{reflection, steady_state_sigma_minus};

use crate::device::{QubitParams, Rates};
use crate::units;
use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use thiserror::Error;

pub(crate) type M3 = Matrix3<C64>;

/// Hermiticity tolerance for density matrices.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance.
pub const TRACE_TOL: f64 = 1e-8;
/// Allowed negative eigenvalue magnitude.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Step-halving convergence gate for the integrator.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integration not converged: step-halving residual {residual:.3e} > {tol:.1e}")]
    Integration { residual: f64, tol: f64 },
    #[error("density matrix invariant violated: {0}")]
    Invariant(String),
}

/// Engine-side system parameters, all in rad/ns.
#[derive(Debug, Clone, Copy)]
pub struct SystemParams {
    /// Total relaxation rate Gamma_1.
    pub gamma1: f64,
    /// Pure dephasing rate gamma.
    pub gamma_phi: f64,
    /// Anharmonicity alpha = omega12 - omega01 (negative).
    pub anharm: f64,
    /// Ladder drive coupling factor lambda.
    pub lambda: f64,
}

impl SystemParams {
    /// Conversion boundary: device rates (rad/us) and transmon anharmonicity
    /// (-EC, GHz) into engine units (rad/ns).
    pub fn from_device(q: &QubitParams, r: &Rates) -> Self {
        Self {
            gamma1: units::rad_per_us_to_rad_per_ns(r.gamma1()),
            gamma_phi: units::rad_per_us_to_rad_per_ns(r.gamma_phi),
            anharm: units::ghz_to_rad_per_ns(-q.ec_ghz),
            lambda: q.lambda_12,
        }
    }

    /// Two-level truncation: the drive never reaches |2>.
    pub fn two_level(gamma1_rad_ns: f64, gamma_phi_rad_ns: f64) -> Self {
        Self {
            gamma1: gamma1_rad_ns,
            gamma_phi: gamma_phi_rad_ns,
            anharm: -1.0,
            lambda: 0.0,
        }
    }

    /// Right-hand side of the master equation for a general (not necessarily
    /// Hermitian) operator, as required by quantum-regression propagation.
    #[inline]
    pub(crate) fn rhs(&self, omega: f64, delta: f64, x: &M3) -> M3 {
        let h01 = 0.5 * omega;
        let h11 = delta;
        let h12 = 0.5 * self.lambda * omega;
        let h22 = self.anharm + 2.0 * delta;

        let x00 = x[(0, 0)];
        let x01 = x[(0, 1)];
        let x02 = x[(0, 2)];
        let x10 = x[(1, 0)];
        let x11 = x[(1, 1)];
        let x12 = x[(1, 2)];
        let x20 = x[(2, 0)];
        let x21 = x[(2, 1)];
        let x22 = x[(2, 2)];

        let ni = C64::new(0.0, -1.0);
        // -i [H, x] with H real symmetric (h00 = h02 = 0)
        let c00 = ni * (h01 * (x10 - x01));
        let c01 = ni * (h01 * (x11 - x00) - h11 * x01 - h12 * x02);
        let c02 = ni * (h01 * x12 - h12 * x01 - h22 * x02);
        let c10 = ni * (h01 * (x00 - x11) + h11 * x10 + h12 * x20);
        let c11 = ni * (h01 * (x01 - x10) + h12 * (x21 - x12));
        let c12 = ni * (h01 * x02 + h12 * (x22 - x11) + (h11 - h22) * x12);
        let c20 = ni * (h12 * x10 + h22 * x20 - h01 * x21);
        let c21 = ni * (h12 * (x11 - x22) + (h22 - h11) * x21 - h01 * x20);
        let c22 = ni * (h12 * (x12 - x21));

        // dissipator, element by element
        let g1 = self.gamma1;
        let gp = self.gamma_phi;
        let d_oc = 0.5 * g1 + gp; // 0-1 coherence decay = Gamma2
        let d_02 = g1 + gp;
        let d_12 = 1.5 * g1 + 2.0 * gp;

        Matrix3::new(
            c00 + g1 * x11,
            c01 - d_oc * x01,
            c02 - d_02 * x02,
            c10 - d_oc * x10,
            c11 - g1 * x11 + 2.0 * g1 * x22,
            c12 - d_12 * x12,
            c20 - d_02 * x20,
            c21 - d_12 * x21,
            c22 - 2.0 * g1 * x22,
        )
    }
}

/// Validated 3x3 density matrix over {|0>, |1>, |2>}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    m: M3,
}

impl DensityMatrix3 {
    pub fn ground() -> Self {
        Self::pure(0)
    }

    /// |k><k| for k in 0..3.
    pub fn pure(level: usize) -> Self {
        assert!(level < 3);
        let mut m = M3::zeros();
        m[(level, level)] = C64::new(1.0, 0.0);
        Self { m }
    }

    pub fn from_matrix(m: M3) -> Result<Self, LindbladError> {
        let rho = Self { m };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: M3) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &M3 {
        &self.m
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn population(&self, level: usize) -> f64 {
        self.m[(level, level)].re
    }

    pub fn trace(&self) -> C64 {
        self.m[(0, 0)] + self.m[(1, 1)] + self.m[(2, 2)]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let herm = (self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let ev = herm.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2]];
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    /// Hermiticity to 1e-10, unit trace to 1e-8, eigenvalues >= -1e-8.
    pub fn validate(&self) -> Result<(), LindbladError> {
        let mut herm_dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                herm_dev = herm_dev.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        if herm_dev > HERMITICITY_TOL {
            return Err(LindbladError::Invariant(format!(
                "hermiticity deviation {herm_dev:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(LindbladError::Invariant(format!("trace = {tr}")));
        }
        let ev = self.eigenvalues();
        if ev[0] < -POSITIVITY_TOL {
            return Err(LindbladError::Invariant(format!(
                "negative eigenvalue {:.3e}",
                ev[0]
            )));
        }
        Ok(())
    }
}
