//! Finite detection bandwidth.
//!
//! The measurement chain only states a cutoff, so the shape is a choice: a
//! 4th-order Butterworth low-pass. Amplitude-like quantities are convolved
//! with its impulse response; power-like quantities and G2 are smoothed with
//! the normalized intensity response |h|^2 in each time argument, an
//! approximation to the exact filtered fourth-order correlator.

use super::evolve::EmissionRecord;
use num_complex::Complex64 as C64;

/// Biquad section quality factors of a 4th-order Butterworth low-pass.
const BUTTER4_Q: [f64; 2] = [0.541_196_100_146_196_9, 1.306_562_964_876_376_6];

#[derive(Debug, Clone, Copy)]
pub struct ButterworthLp {
    pub cutoff_mhz: f64,
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// RBJ low-pass section; unity gain at DC.
    fn lowpass(f_cut_per_sample: f64, q: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * f_cut_per_sample;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        let a0 = 1.0 + alpha;
        Self {
            b0: (1.0 - c) / 2.0 / a0,
            b1: (1.0 - c) / a0,
            b2: (1.0 - c) / 2.0 / a0,
            a1: -2.0 * c / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(x.len());
        let (mut z1, mut z2) = (0.0f64, 0.0f64);
        for &v in x {
            let out = self.b0 * v + z1;
            z1 = self.b1 * v - self.a1 * out + z2;
            z2 = self.b2 * v - self.a2 * out;
            y.push(out);
        }
        y
    }
}

impl ButterworthLp {
    pub fn new(cutoff_mhz: f64) -> Self {
        Self { cutoff_mhz }
    }

    fn sections(&self, dt_ns: f64) -> Option<[Biquad; 2]> {
        if !self.cutoff_mhz.is_finite() {
            return None; // infinite bandwidth: identity
        }
        let f = self.cutoff_mhz * 1e-3 * dt_ns; // cycles per sample
        assert!(
            f > 0.0 && f < 0.45,
            "filter cutoff {} MHz too close to the grid Nyquist (dt = {} ns)",
            self.cutoff_mhz,
            dt_ns
        );
        Some([
            Biquad::lowpass(f, BUTTER4_Q[0]),
            Biquad::lowpass(f, BUTTER4_Q[1]),
        ])
    }

    pub fn filter_real(&self, dt_ns: f64, x: &[f64]) -> Vec<f64> {
        match self.sections(dt_ns) {
            None => x.to_vec(),
            Some([s1, s2]) => s2.run(&s1.run(x)),
        }
    }

    pub fn filter_complex(&self, dt_ns: f64, x: &[C64]) -> Vec<C64> {
        match self.sections(dt_ns) {
            None => x.to_vec(),
            Some([s1, s2]) => {
                let re: Vec<f64> = x.iter().map(|v| v.re).collect();
                let im: Vec<f64> = x.iter().map(|v| v.im).collect();
                let re = s2.run(&s1.run(&re));
                let im = s2.run(&s1.run(&im));
                re.into_iter().zip(im).map(|(r, i)| C64::new(r, i)).collect()
            }
        }
    }

    /// Discrete impulse response, truncated once the remaining tail is
    /// negligible, normalized to unit sum (exact unit DC gain).
    pub fn amplitude_kernel(&self, dt_ns: f64) -> Vec<f64> {
        match self.sections(dt_ns) {
            None => vec![1.0],
            Some(_) => {
                // settle length from the slowest pole pair: Re = -wc*sin(pi/8)
                let wc = 2.0 * std::f64::consts::PI * self.cutoff_mhz * 1e-3;
                let tail = 1.0 / (wc * (std::f64::consts::PI / 8.0).sin());
                let len = ((30.0 * tail / dt_ns).ceil() as usize).max(8);
                let mut impulse = vec![0.0; len];
                impulse[0] = 1.0;
                let mut h = self.filter_real(dt_ns, &impulse);
                let sum: f64 = h.iter().sum();
                for v in &mut h {
                    *v /= sum;
                }
                h
            }
        }
    }

    /// Normalized |h|^2 smoothing kernel for power-like quantities.
    pub fn intensity_kernel(&self, dt_ns: f64) -> Vec<f64> {
        let h = self.amplitude_kernel(dt_ns);
        let mut w: Vec<f64> = h.iter().map(|v| v * v).collect();
        let sum: f64 = w.iter().sum();
        for v in &mut w {
            *v /= sum;
        }
        w
    }
}

/// Causal convolution with a finite kernel, same length as the input.
pub(crate) fn convolve_causal(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        let kmax = kernel.len().min(n + 1);
        let mut acc = 0.0;
        for (k, &w) in kernel.iter().take(kmax).enumerate() {
            acc += w * x[n - k];
        }
        *out = acc;
    }
    y
}

/// Apply the detection bandwidth to an emission record: amplitude through
/// the filter itself, power through the intensity-response smoothing.
/// Populations are internal quantities and pass through unchanged.
///
/// `bandwidth_mhz` is the full two-sided analysis bandwidth around the
/// carrier, as quoted for an IF detection chain; the baseband low-pass
/// cutoff is half of it.
pub fn apply_detection_filter(record: &EmissionRecord, bandwidth_mhz: f64) -> EmissionRecord {
    assert!(bandwidth_mhz > 0.0, "bandwidth must be positive");
    let lp = ButterworthLp::new(0.5 * bandwidth_mhz);
    if record.times_ns.len() < 2 {
        return record.clone();
    }
    let dt = record.times_ns[1] - record.times_ns[0];
    let amp = lp.filter_complex(dt, &record.amp);
    let w = lp.intensity_kernel(dt);
    let power = convolve_causal(&record.power, &w);
    EmissionRecord {
        times_ns: record.times_ns.clone(),
        amp,
        power,
        populations: record.populations.clone(),
        drive_end_ns: record.drive_end_ns,
    }
}
