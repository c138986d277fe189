//! Partial correlation accumulators and the fixed-shape merge tree.
//!
//! Records are summed into per-chunk accumulators in record order; chunk
//! accumulators are folded into a binary-counter forest keyed by arrival
//! index. The resulting reduction tree depends only on the chunk count,
//! never on worker scheduling, which is what makes multi-worker runs
//! bitwise reproducible. Accumulators serialize so interrupted runs can
//! resume from a checkpoint.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Sums of per-record correlation estimates.
///
/// `g1_*` hold lags -tau_max..=tau_max; `g2_*` hold 0..=tau_max. The
/// negative gamma2 wing is the identical sum term-for-term (the quasi-auto
/// correlation has no conjugation), so only one side is stored.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorrAccumulator {
    pub tau_max: usize,
    pub record_len: usize,
    pub g1_sig: Vec<C64>,
    pub g1_bg: Vec<C64>,
    pub g2_sig: Vec<C64>,
    pub g2_bg: Vec<C64>,
    pub n_sig: u64,
    pub n_bg: u64,
}

impl CorrAccumulator {
    pub fn new(tau_max: usize, record_len: usize) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self {
            tau_max,
            record_len,
            g1_sig: vec![zero; 2 * tau_max + 1],
            g1_bg: vec![zero; 2 * tau_max + 1],
            g2_sig: vec![zero; tau_max + 1],
            g2_bg: vec![zero; tau_max + 1],
            n_sig: 0,
            n_bg: 0,
        }
    }

    /// Elementwise merge; the orientation (self absorbs other) is part of
    /// the fixed reduction order.
    pub fn merge(&mut self, other: &CorrAccumulator) {
        assert_eq!(self.tau_max, other.tau_max, "accumulator shape mismatch");
        assert_eq!(self.record_len, other.record_len);
        for (a, b) in self.g1_sig.iter_mut().zip(&other.g1_sig) {
            *a += b;
        }
        for (a, b) in self.g1_bg.iter_mut().zip(&other.g1_bg) {
            *a += b;
        }
        for (a, b) in self.g2_sig.iter_mut().zip(&other.g2_sig) {
            *a += b;
        }
        for (a, b) in self.g2_bg.iter_mut().zip(&other.g2_bg) {
            *a += b;
        }
        self.n_sig += other.n_sig;
        self.n_bg += other.n_bg;
    }
}

/// Binary counter over chunk accumulators: pushing chunk k merges exactly
/// like the bottom-up pairwise summation tree over chunk index.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MergeForest {
    levels: Vec<Option<CorrAccumulator>>,
    pushed: u64,
}

impl MergeForest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, mut acc: CorrAccumulator) {
        let mut level = 0;
        loop {
            if level == self.levels.len() {
                self.levels.push(Some(acc));
                break;
            }
            match self.levels[level].take() {
                None => {
                    self.levels[level] = Some(acc);
                    break;
                }
                Some(mut held) => {
                    // earlier chunk absorbs the later one
                    held.merge(&acc);
                    acc = held;
                    level += 1;
                }
            }
        }
        self.pushed += 1;
    }

    /// Collapse remaining levels in ascending order.
    pub fn finish(mut self) -> Option<CorrAccumulator> {
        let mut acc: Option<CorrAccumulator> = None;
        for slot in self.levels.drain(..) {
            if let Some(mut held) = slot {
                if let Some(prev) = acc.take() {
                    held.merge(&prev);
                }
                acc = Some(held);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc_with(v: f64) -> CorrAccumulator {
        let mut a = CorrAccumulator::new(2, 8);
        a.g1_sig[0] = C64::new(v, -v);
        a.g2_sig[1] = C64::new(2.0 * v, 0.0);
        a.n_sig = 1;
        a
    }

    /// Scalar replica of the forest's merge order.
    fn counter_sum(vals: &[f64]) -> f64 {
        let mut levels: Vec<Option<f64>> = Vec::new();
        for &v in vals {
            let mut x = v;
            let mut level = 0;
            loop {
                if level == levels.len() {
                    levels.push(Some(x));
                    break;
                }
                match levels[level].take() {
                    None => {
                        levels[level] = Some(x);
                        break;
                    }
                    Some(held) => {
                        x = held + x;
                        level += 1;
                    }
                }
            }
        }
        let mut acc: Option<f64> = None;
        for slot in levels {
            if let Some(held) = slot {
                acc = Some(match acc {
                    None => held,
                    Some(prev) => held + prev,
                });
            }
        }
        acc.unwrap()
    }

    #[test]
    fn forest_matches_scalar_counter_bitwise() {
        // 1e16 and 1.0 summands expose any ordering difference
        let vals = [1e16, 1.0, 1.0, -1e16, 3.0, 7.0, 1e-3];
        let mut forest = MergeForest::new();
        for &v in &vals {
            forest.push(acc_with(v));
        }
        let total = forest.finish().unwrap();
        assert_eq!(total.g1_sig[0].re, counter_sum(&vals));
        assert_eq!(total.n_sig, vals.len() as u64);
    }
}
