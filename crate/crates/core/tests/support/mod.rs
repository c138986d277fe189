#![allow(dead_code)] // each test target uses its own subset

//! Independent oracles shared by the integration tests. Everything here
//! deliberately avoids the library's own propagation paths: charge-basis
//! diagonalization for the transmon, vectorized-superoperator matrix
//! exponentials for Lindblad dynamics, and plain double loops for the
//! correlation estimators.

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex32, Complex64 as C64};

/// Transmon transition frequencies from charge-basis diagonalization with
/// `n_charge` states each side of zero (ng = 0).
pub fn transmon_charge_basis(ej_ghz: f64, ec_ghz: f64, n_charge: usize) -> (f64, f64) {
    let dim = 2 * n_charge + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let n = i as f64 - n_charge as f64;
        h[(i, i)] = 4.0 * ec_ghz * n * n;
        if i + 1 < dim {
            h[(i, i + 1)] = -0.5 * ej_ghz;
            h[(i + 1, i)] = -0.5 * ej_ghz;
        }
    }
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (ev[1] - ev[0], ev[2] - ev[1])
}

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Dense complex matrix exponential by scaling and squaring with a Taylor
/// core; fine for the small superoperators used in tests.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|v| v.norm()).fold(0.0, f64::max) * n as f64;
    let s = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = a.map(|v| v / C64::new(2f64.powi(s as i32), 0.0));
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = DMatrix::<C64>::identity(n, n);
    for k in 1..=24 {
        term = (&term * &scaled).map(|v| v / C64::new(k as f64, 0.0));
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Column-stacking vectorization.
pub fn vec_of(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_iterator(m.nrows() * m.ncols(), m.iter().cloned())
}

pub fn unvec(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_iterator(dim, dim, v.iter().cloned())
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Lindblad superoperator L with vec(rho') = L vec(rho) for column stacking:
/// L = -i (I (x) H - H^T (x) I) + sum_k [ conj(C) (x) C
///     - 1/2 (I (x) C^+C + (C^+C)^T (x) I) ].
pub fn liouvillian(h: &DMatrix<C64>, collapse: &[DMatrix<C64>]) -> DMatrix<C64> {
    let dim = h.nrows();
    let id = DMatrix::<C64>::identity(dim, dim);
    let i = C64::new(0.0, 1.0);
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)).map(|v| -i * v);
    for c in collapse {
        let cdc = c.adjoint() * c;
        l += kron(&c.map(|v| v.conj()), c)
            - (kron(&id, &cdc) + kron(&cdc.transpose(), &id)).map(|v| v * 0.5);
    }
    l
}

/// Two-level generator pieces matching the engine convention:
/// H = [[0, omega/2], [omega/2, delta]] (delta = omega01 - omega_d),
/// relaxation sqrt(gamma1) |0><1| and dephasing sqrt(2 gamma_phi) |1><1|.
pub fn two_level_ops(
    omega: f64,
    delta: f64,
    gamma1: f64,
    gamma_phi: f64,
) -> (DMatrix<C64>, Vec<DMatrix<C64>>) {
    let c = |re: f64| C64::new(re, 0.0);
    let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(omega / 2.0), c(omega / 2.0), c(delta)]);
    let mut sigma01 = DMatrix::<C64>::zeros(2, 2);
    sigma01[(0, 1)] = c(1.0);
    let mut sigma11 = DMatrix::<C64>::zeros(2, 2);
    sigma11[(1, 1)] = c(1.0);
    (
        h,
        vec![
            sigma01.map(|v| v * c(gamma1.sqrt())),
            sigma11.map(|v| v * c((2.0 * gamma_phi).sqrt())),
        ],
    )
}

/// Steady state of a constant Liouvillian by null-space solve: replace the
/// first row with the trace condition.
pub fn steady_state(l: &DMatrix<C64>, dim: usize) -> DMatrix<C64> {
    let n = dim * dim;
    let mut a = l.clone();
    let mut rhs = DVector::<C64>::zeros(n);
    for j in 0..n {
        a[(0, j)] = C64::new(0.0, 0.0);
    }
    for k in 0..dim {
        a[(0, k * dim + k)] = C64::new(1.0, 0.0);
    }
    rhs[0] = C64::new(1.0, 0.0);
    let sol = a.lu().solve(&rhs).expect("steady-state solve failed");
    unvec(&sol, dim)
}

/// Brute-force per-record correlation sums, written as the plainest possible
/// double loops in the same fixed reduction order as the direct kernel:
/// ascending t inside ascending tau, complex f64 accumulation.
pub fn brute_force_record(
    a: &[Complex32],
    b: &[Complex32],
    tau_max: usize,
    g1: &mut [C64],
    g2: &mut [C64],
) {
    let n = a.len();
    let widen = |v: Complex32| C64::new(v.re as f64, v.im as f64);
    let t = tau_max as i64;
    for tau in -t..=t {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let j = i as i64 + tau;
            if j < 0 || j >= n as i64 {
                continue;
            }
            acc += widen(a[i]).conj() * widen(b[j as usize]);
        }
        g1[(tau + t) as usize] += acc;
    }
    let c: Vec<C64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| widen(x).conj() * widen(y))
        .collect();
    for tau in 0..=tau_max {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n - tau {
            acc += c[i] * c[i + tau];
        }
        g2[tau] += acc;
    }
}
