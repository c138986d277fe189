//! Per-record estimator kernels.
//!
//! `Direct` is the reference: plain lag-domain sums in a fixed order
//! (ascending t inside ascending tau), bitwise-identical to the brute-force
//! oracle. `Fft` computes the same linear correlations through zero-padded
//! FFTs; it deviates from Direct only by floating-point rounding (tested to
//! <= 1e-12 relative) and carries the throughput target. `Auto` picks Fft
//! for records long enough to amortize the transforms.

use num_complex::{Complex32, Complex64 as C64};
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    #[default]
    Auto,
    Direct,
    Fft,
}

pub(crate) enum KernelImpl {
    Direct,
    Fft(FftKernel),
}

impl KernelImpl {
    pub(crate) fn build(mode: KernelMode, record_len: usize, tau_max: usize) -> Self {
        let use_fft = match mode {
            KernelMode::Direct => false,
            KernelMode::Fft => true,
            KernelMode::Auto => record_len >= 512,
        };
        if use_fft {
            KernelImpl::Fft(FftKernel::new(record_len, tau_max))
        } else {
            KernelImpl::Direct
        }
    }

    pub(crate) fn scratch(&self, record_len: usize) -> Scratch {
        let m = match self {
            KernelImpl::Direct => 0,
            KernelImpl::Fft(f) => f.m,
        };
        Scratch {
            a64: Vec::with_capacity(record_len),
            b64: Vec::with_capacity(record_len),
            c64: Vec::with_capacity(record_len),
            fa: vec![C64::new(0.0, 0.0); m],
            fb: vec![C64::new(0.0, 0.0); m],
            work: vec![C64::new(0.0, 0.0); m],
            fft_scratch: vec![
                C64::new(0.0, 0.0);
                match self {
                    KernelImpl::Direct => 0,
                    KernelImpl::Fft(f) => f.scratch_len(),
                }
            ],
        }
    }

    /// Accumulate one record into the lag sums: `g1` has lags
    /// -tau_max..=tau_max, `g2` lags 0..=tau_max.
    pub(crate) fn process(
        &self,
        a: &[Complex32],
        b: &[Complex32],
        tau_max: usize,
        g1: &mut [C64],
        g2: &mut [C64],
        s: &mut Scratch,
    ) {
        widen(a, &mut s.a64);
        widen(b, &mut s.b64);
        s.c64.clear();
        s.c64
            .extend(s.a64.iter().zip(&s.b64).map(|(x, y)| x.conj() * y));
        match self {
            KernelImpl::Direct => direct_accumulate(&s.a64, &s.b64, &s.c64, tau_max, g1, g2),
            KernelImpl::Fft(f) => f.accumulate(tau_max, g1, g2, s),
        }
    }
}

pub(crate) struct Scratch {
    a64: Vec<C64>,
    b64: Vec<C64>,
    c64: Vec<C64>,
    fa: Vec<C64>,
    fb: Vec<C64>,
    work: Vec<C64>,
    fft_scratch: Vec<C64>,
}

fn widen(src: &[Complex32], dst: &mut Vec<C64>) {
    dst.clear();
    dst.extend(
        src.iter()
            .map(|v| C64::new(v.re as f64, v.im as f64)),
    );
}

/// Reference lag-domain sums. The loop order (t ascending inside each lag)
/// is the fixed reduction order the estimator is specified against.
fn direct_accumulate(
    a: &[C64],
    b: &[C64],
    c: &[C64],
    tau_max: usize,
    g1: &mut [C64],
    g2: &mut [C64],
) {
    let n = a.len();
    let t = tau_max as i64;
    for tau in -t..=t {
        let mut acc = C64::new(0.0, 0.0);
        let (lo, hi) = if tau >= 0 {
            (0usize, n - tau as usize)
        } else {
            ((-tau) as usize, n)
        };
        for i in lo..hi {
            acc += a[i].conj() * b[(i as i64 + tau) as usize];
        }
        g1[(tau + t) as usize] += acc;
    }
    for tau in 0..=tau_max {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n - tau {
            acc += c[i] * c[i + tau];
        }
        g2[tau] += acc;
    }
}

pub(crate) struct FftKernel {
    pub(crate) m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftKernel {
    fn new(record_len: usize, tau_max: usize) -> Self {
        // linear (non-circular) correlation needs m >= n + tau_max + 1
        let m = (record_len + tau_max + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    fn scratch_len(&self) -> usize {
        self.fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
    }

    fn accumulate(&self, tau_max: usize, g1: &mut [C64], g2: &mut [C64], s: &mut Scratch) {
        let m = self.m;
        let norm = 1.0 / m as f64;
        load_padded(&s.a64, &mut s.fa, m);
        load_padded(&s.b64, &mut s.fb, m);
        self.fwd.process_with_scratch(&mut s.fa, &mut s.fft_scratch);
        self.fwd.process_with_scratch(&mut s.fb, &mut s.fft_scratch);
        for k in 0..m {
            s.work[k] = s.fa[k].conj() * s.fb[k];
        }
        self.inv.process_with_scratch(&mut s.work, &mut s.fft_scratch);
        // ifft(conj(FA) .* FB)[tau] = sum_t conj(a[t]) b[t+tau], negative
        // lags wrap to the top of the buffer
        let t = tau_max as i64;
        for tau in -t..=t {
            let idx = tau.rem_euclid(m as i64) as usize;
            g1[(tau + t) as usize] += s.work[idx] * norm;
        }

        load_padded(&s.c64, &mut s.fa, m);
        self.fwd.process_with_scratch(&mut s.fa, &mut s.fft_scratch);
        // sum_t c[t] c[t+tau] = ifft(FC[k] * FC[-k mod m])[tau]
        s.work[0] = s.fa[0] * s.fa[0];
        for k in 1..m {
            s.work[k] = s.fa[k] * s.fa[m - k];
        }
        self.inv.process_with_scratch(&mut s.work, &mut s.fft_scratch);
        for (tau, out) in g2.iter_mut().enumerate() {
            *out += s.work[tau] * norm;
        }
    }
}

fn load_padded(src: &[C64], dst: &mut [C64], m: usize) {
    dst[..src.len()].copy_from_slice(src);
    for v in dst[src.len()..m].iter_mut() {
        *v = C64::new(0.0, 0.0);
    }
}
