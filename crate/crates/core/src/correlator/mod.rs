//! Streaming two-channel correlation estimators.
//!
//! Gamma1(tau) = sum_t S_A*(t) S_B(t+tau) and Gamma2(tau) =
//! sum_t S_A*(t) S_A*(t+tau) S_B(t+tau) S_B(t), summed per record and
//! averaged separately over signal and background records. Gamma2 is the
//! quasi-auto correlation of the cross-power S_A*(t) S_B(t); it measures a
//! second-order correlation only when the splitter idle port is in vacuum.
//!
//! The integrals are discretized as plain sums over samples at integer
//! sample lags. Accumulation is double precision with a fixed-shape pairwise
//! merge tree over record chunks, so results are bitwise identical for any
//! worker count and large averages do not lose precision.

pub mod accum;
pub mod kernel;

pub use accum::{CorrAccumulator, MergeForest};
pub use kernel::KernelMode;

use crate::chain::{generate_record, ChainConfig, IQTraceBatch, RecordKind, RecordSchedule, SourceSpec};
use crate::pulse::PulseTrain;
use kernel::KernelImpl;
use num_complex::{Complex32, Complex64 as C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorrError {
    #[error("tau_max = {tau_max} samples must be < record_len/2 = {limit}")]
    Range { tau_max: usize, limit: usize },
    #[error("estimate has no background records to subtract")]
    MissingBackground,
    #[error("need at least 2 side peaks inside tau_max, found {found}")]
    InsufficientPeaks { found: usize },
    #[error("correlator config error: {0}")]
    Config(String),
}

/// Chunks per parallel dispatch block; fixed so the merge tree shape depends
/// only on the chunk index sequence.
const CHUNKS_PER_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy)]
pub struct CorrConfig {
    /// Maximum lag in samples.
    pub tau_max: usize,
    pub kernel: KernelMode,
    /// Records per chunk (per-chunk sums are sequential in record order).
    pub chunk_records: usize,
    /// Worker threads; 1 runs fully sequential.
    pub workers: usize,
}

impl Default for CorrConfig {
    fn default() -> Self {
        Self {
            tau_max: 512,
            kernel: KernelMode::Auto,
            chunk_records: 64,
            workers: 1,
        }
    }
}

/// Anything that can hand out records by index: an in-memory batch, a file,
/// or an on-the-fly synthesizer.
pub trait RecordSource: Sync {
    fn n_records(&self) -> usize;
    fn record_len(&self) -> usize;
    fn dt_ns(&self) -> f64;
    /// Copy record `idx` into the buffers and report its kind.
    fn fetch(&self, idx: usize, a: &mut Vec<Complex32>, b: &mut Vec<Complex32>) -> RecordKind;
}

impl RecordSource for IQTraceBatch {
    fn n_records(&self) -> usize {
        self.records_a.len()
    }
    fn record_len(&self) -> usize {
        self.config.record_len
    }
    fn dt_ns(&self) -> f64 {
        self.config.dt_ns()
    }
    fn fetch(&self, idx: usize, a: &mut Vec<Complex32>, b: &mut Vec<Complex32>) -> RecordKind {
        a.clear();
        a.extend_from_slice(&self.records_a[idx]);
        b.clear();
        b.extend_from_slice(&self.records_b[idx]);
        self.kind(idx)
    }
}

/// Synthesizes records on demand; lets million-record runs stream without
/// materializing the batch.
pub struct SynthSource {
    pub cfg: ChainConfig,
    pub source: SourceSpec,
    pub schedule: RecordSchedule,
    pub n_pairs: usize,
    pub seed: u64,
}

impl RecordSource for SynthSource {
    fn n_records(&self) -> usize {
        2 * self.n_pairs
    }
    fn record_len(&self) -> usize {
        self.cfg.record_len
    }
    fn dt_ns(&self) -> f64 {
        self.cfg.dt_ns()
    }
    fn fetch(&self, idx: usize, a: &mut Vec<Complex32>, b: &mut Vec<Complex32>) -> RecordKind {
        let (ra, rb) = generate_record(&self.cfg, &self.source, &self.schedule, self.seed, idx);
        *a = ra;
        *b = rb;
        if idx % 2 == 0 {
            RecordKind::Signal
        } else {
            RecordKind::Background
        }
    }
}

/// Resumable run state: everything needed to continue after `records_done`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub records_done: usize,
    pub tau_max: usize,
    pub forest: MergeForest,
}

/// Wall-clock accounting of a correlate run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunStats {
    pub records: usize,
    pub bytes: u64,
    pub seconds: f64,
    pub throughput_mbps: f64,
}

/// Normalization metadata attached by [`normalize_g2`].
#[derive(Debug, Clone, Serialize)]
pub struct NormMeta {
    pub period_samples: usize,
    pub window_samples: usize,
    pub pulses_per_record: usize,
    /// Integrated side-peak heights after pair-count correction, by lag.
    pub side_heights: Vec<(i64, f64)>,
    pub mean_side_height: f64,
    pub center_integrated: f64,
    /// Integrated center over mean integrated side peak: the antibunching
    /// figure (1 for coherent, 2 for thermal, < 1 for a single-photon
    /// source).
    pub center_ratio: f64,
}

/// Finalized estimate: averages over records, lags -tau_max..=tau_max.
#[derive(Debug, Clone)]
pub struct CorrEstimate {
    pub dt_ns: f64,
    pub tau_max: usize,
    pub n_averages: u64,
    pub n_background: u64,
    pub gamma1: Vec<C64>,
    pub gamma1_bg: Vec<C64>,
    pub gamma2: Vec<f64>,
    pub gamma2_bg: Vec<f64>,
    pub background_subtracted: bool,
    pub normalization: Option<NormMeta>,
}

impl CorrEstimate {
    pub fn tau_samples(&self) -> Vec<i64> {
        let t = self.tau_max as i64;
        (-t..=t).collect()
    }

    pub fn tau_ns(&self) -> Vec<f64> {
        let t = self.tau_max as i64;
        (-t..=t).map(|k| k as f64 * self.dt_ns).collect()
    }

    /// Index of an integer sample lag.
    pub fn idx(&self, tau: i64) -> usize {
        (tau + self.tau_max as i64) as usize
    }

    fn from_accumulator(acc: &CorrAccumulator, dt_ns: f64) -> Self {
        let ns = (acc.n_sig.max(1)) as f64;
        let nb = (acc.n_bg.max(1)) as f64;
        let t = acc.tau_max;
        let gamma1: Vec<C64> = acc.g1_sig.iter().map(|v| v / ns).collect();
        let gamma1_bg: Vec<C64> = acc.g1_bg.iter().map(|v| v / nb).collect();
        // mirror the one-sided quasi-auto sums: Gamma2(-tau) is term-for-term
        // the same sum as Gamma2(tau)
        let expand = |one: &Vec<C64>, n: f64| -> Vec<f64> {
            let mut full = vec![0.0; 2 * t + 1];
            for tau in 0..=t {
                let v = (one[tau] / n).re;
                full[t + tau] = v;
                full[t - tau] = v;
            }
            full
        };
        Self {
            dt_ns,
            tau_max: t,
            n_averages: acc.n_sig,
            n_background: acc.n_bg,
            gamma1,
            gamma1_bg,
            gamma2: expand(&acc.g2_sig, ns),
            gamma2_bg: expand(&acc.g2_bg, nb),
            background_subtracted: false,
            normalization: None,
        }
    }
}

/// Run the estimator over a record source.
pub fn correlate(
    source: &dyn RecordSource,
    cfg: &CorrConfig,
) -> Result<(CorrEstimate, RunStats), CorrError> {
    correlate_with_checkpoint(source, cfg, None, &mut |_| {})
}

/// As [`correlate`], optionally resuming from a checkpoint; `on_block` sees
/// the run state after every dispatch block and may persist it.
pub fn correlate_with_checkpoint(
    source: &dyn RecordSource,
    cfg: &CorrConfig,
    resume: Option<Checkpoint>,
    on_block: &mut dyn FnMut(&Checkpoint),
) -> Result<(CorrEstimate, RunStats), CorrError> {
    let n = source.n_records();
    let record_len = source.record_len();
    if record_len == 0 || cfg.tau_max >= record_len / 2 {
        return Err(CorrError::Range {
            tau_max: cfg.tau_max,
            limit: record_len / 2,
        });
    }
    if cfg.chunk_records == 0 || cfg.workers == 0 {
        return Err(CorrError::Config(
            "chunk_records and workers must be positive".into(),
        ));
    }
    let kernel = KernelImpl::build(cfg.kernel, record_len, cfg.tau_max);

    let (mut forest, start_record) = match resume {
        Some(ck) => {
            if ck.tau_max != cfg.tau_max {
                return Err(CorrError::Config(format!(
                    "checkpoint tau_max {} does not match configured {}",
                    ck.tau_max, cfg.tau_max
                )));
            }
            if ck.records_done != n && ck.records_done % cfg.chunk_records != 0 {
                return Err(CorrError::Config(
                    "checkpoint not aligned to the chunk size".into(),
                ));
            }
            (ck.forest, ck.records_done)
        }
        None => (MergeForest::new(), 0),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CorrError::Config(e.to_string()))?;

    let t_start = std::time::Instant::now();
    let n_chunks = n.div_ceil(cfg.chunk_records);
    let first_chunk = start_record.div_ceil(cfg.chunk_records);
    let mut chunk = first_chunk;
    while chunk < n_chunks {
        let block_end = (chunk + CHUNKS_PER_BLOCK).min(n_chunks);
        let accs: Vec<CorrAccumulator> = pool.install(|| {
            (chunk..block_end)
                .into_par_iter()
                .map(|c| {
                    let lo = c * cfg.chunk_records;
                    let hi = ((c + 1) * cfg.chunk_records).min(n);
                    compute_chunk(source, &kernel, cfg.tau_max, record_len, lo, hi)
                })
                .collect()
        });
        for acc in accs {
            forest.push(acc);
        }
        chunk = block_end;
        let ck = Checkpoint {
            records_done: (chunk * cfg.chunk_records).min(n),
            tau_max: cfg.tau_max,
            forest: forest.clone(),
        };
        on_block(&ck);
    }
    let seconds = t_start.elapsed().as_secs_f64();

    let total = forest
        .finish()
        .unwrap_or_else(|| CorrAccumulator::new(cfg.tau_max, record_len));
    let processed = n - start_record;
    let bytes = processed as u64 * record_len as u64 * 16;
    let stats = RunStats {
        records: processed,
        bytes,
        seconds,
        throughput_mbps: bytes as f64 / 1e6 / seconds,
    };
    Ok((CorrEstimate::from_accumulator(&total, source.dt_ns()), stats))
}

fn compute_chunk(
    source: &dyn RecordSource,
    kernel: &KernelImpl,
    tau_max: usize,
    record_len: usize,
    lo: usize,
    hi: usize,
) -> CorrAccumulator {
    let mut acc = CorrAccumulator::new(tau_max, record_len);
    let mut scratch = kernel.scratch(record_len);
    let mut a = Vec::with_capacity(record_len);
    let mut b = Vec::with_capacity(record_len);
    for idx in lo..hi {
        let kind = source.fetch(idx, &mut a, &mut b);
        match kind {
            RecordKind::Signal => {
                kernel.process(&a, &b, tau_max, &mut acc.g1_sig, &mut acc.g2_sig, &mut scratch);
                acc.n_sig += 1;
            }
            RecordKind::Background => {
                kernel.process(&a, &b, tau_max, &mut acc.g1_bg, &mut acc.g2_bg, &mut scratch);
                acc.n_bg += 1;
            }
        }
    }
    acc
}

/// Subtract the background estimate: G ~ Gamma - Gamma_bg.
pub fn subtract_background(est: &CorrEstimate) -> Result<CorrEstimate, CorrError> {
    if est.n_background == 0 {
        return Err(CorrError::MissingBackground);
    }
    let mut out = est.clone();
    for (v, bg) in out.gamma1.iter_mut().zip(&est.gamma1_bg) {
        *v -= bg;
    }
    for (v, bg) in out.gamma2.iter_mut().zip(&est.gamma2_bg) {
        *v -= bg;
    }
    out.background_subtracted = true;
    Ok(out)
}

/// Normalize G2 to the mean integrated side-peak height.
///
/// Side peak n collects count-|n| pulse pairs of the count in the center
/// peak, so each integrated side height is rescaled by count/(count-|n|)
/// before averaging; all side peaks of a periodic classical source then
/// agree and the normalization does not depend on which peaks fit in
/// tau_max. The center-to-side ratio in the metadata is the reported
/// antibunching figure.
pub fn normalize_g2(est: &CorrEstimate, train: &PulseTrain) -> Result<CorrEstimate, CorrError> {
    let period = (train.period_ns / est.dt_ns).round() as usize;
    if period == 0 {
        return Err(CorrError::Config("train period below one sample".into()));
    }
    let window = (period / 4).max(1);
    let t = est.tau_max as i64;
    let mut side_heights = Vec::new();
    let mut n_peak = 1i64;
    while n_peak * period as i64 + window as i64 <= t {
        let n_us = n_peak as usize;
        if n_us >= train.count {
            break;
        }
        let pair_corr = train.count as f64 / (train.count - n_us) as f64;
        for sign in [-1i64, 1] {
            let center = sign * n_peak * period as i64;
            let mut h = 0.0;
            for u in -(window as i64)..=window as i64 {
                h += est.gamma2[est.idx(center + u)];
            }
            side_heights.push((center, h * pair_corr));
        }
        n_peak += 1;
    }
    if side_heights.len() < 2 {
        return Err(CorrError::InsufficientPeaks {
            found: side_heights.len(),
        });
    }
    let mean_side = side_heights.iter().map(|(_, h)| h).sum::<f64>() / side_heights.len() as f64;
    let mut center = 0.0;
    for u in -(window as i64)..=window as i64 {
        center += est.gamma2[est.idx(u)];
    }
    let mut out = est.clone();
    for v in out.gamma2.iter_mut() {
        *v /= mean_side;
    }
    for v in out.gamma2_bg.iter_mut() {
        *v /= mean_side;
    }
    out.normalization = Some(NormMeta {
        period_samples: period,
        window_samples: window,
        pulses_per_record: train.count,
        mean_side_height: mean_side,
        center_integrated: center,
        center_ratio: center / mean_side,
        side_heights,
    });
    Ok(out)
}
