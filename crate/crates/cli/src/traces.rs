//! Trace synthesis and the streaming correlator front end.

use crate::Ctx;
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use sps_core::chain::{synthesize, tracefile, IQTraceBatch, RecordKind, SourceSpec};
use sps_core::correlator::{
    correlate_with_checkpoint, normalize_g2, subtract_background, Checkpoint, CorrEstimate,
    RecordSource, RunStats,
};
use sps_core::csvio;
use sps_core::lindblad::{default_grid, emission_observables, evolve, DensityMatrix3};
use std::path::PathBuf;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Coherent,
    Thermal,
    SimMean,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Source statistics for the synthesized pulses.
    #[arg(long, value_enum, default_value_t = SourceArg::Coherent)]
    pub source: SourceArg,
    /// Number of signal records (each is followed by a background record).
    #[arg(long, default_value_t = 1000)]
    pub records: usize,
    /// Envelope width for coherent/thermal sources, ns.
    #[arg(long, default_value_t = 8.0)]
    pub sigma_ns: f64,
    /// Mean photon number per pulse.
    #[arg(long, default_value_t = 1.0)]
    pub mean_photon: f64,
    /// Output trace file.
    #[arg(long, default_value = "traces.qptb")]
    pub file: PathBuf,
}

pub fn synth(ctx: &Ctx, args: &SynthArgs) -> Result<()> {
    let cfg = &ctx.cfg.chain;
    let dt = cfg.dt_ns();
    let src = match args.source {
        SourceArg::Coherent => SourceSpec::coherent_gaussian(args.sigma_ns, args.mean_photon, dt),
        SourceArg::Thermal => SourceSpec::thermal_gaussian(args.sigma_ns, args.mean_photon, dt),
        SourceArg::SimMean => {
            // emitted mean field of the configured pulse drive
            let grid = default_grid(&ctx.cfg.rates, &ctx.cfg.pulse, dt);
            let traj = evolve(
                &ctx.cfg.qubit,
                &ctx.cfg.rates,
                &ctx.cfg.pulse,
                &DensityMatrix3::ground(),
                &grid,
            )?;
            let rec = emission_observables(&traj, &ctx.cfg.rates);
            SourceSpec::sim_mean(&rec.times_ns, &rec.amp, args.mean_photon)?
        }
    };
    let train = ctx.cfg.train();
    let batch = synthesize(cfg, &src, &train, args.records, ctx.cfg.seed)?;
    let path = ctx.out_path(args.file.to_str().unwrap_or("traces.qptb"));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    tracefile::write_batch(&batch, &path)?;
    println!(
        "wrote {} ({} records of {} samples)",
        path.display(),
        batch.n_records(),
        cfg.record_len
    );
    Ok(())
}

#[derive(Args)]
pub struct CorrelateArgs {
    /// Trace file or directory of trace files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Maximum lag in samples (defaults to the config value).
    #[arg(long)]
    pub tau_max: Option<usize>,
    /// Resume from this checkpoint file and update it as the run proceeds.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Subtract the background estimate.
    #[arg(long)]
    pub subtract: bool,
    /// Normalize G2 to the mean integrated side-peak height of the
    /// configured pulse train.
    #[arg(long)]
    pub normalize: bool,
    /// Output CSV name.
    #[arg(long, default_value = "correlation.csv")]
    pub file: PathBuf,
}

/// Batches from several files presented as one record stream.
struct ConcatBatches {
    batches: Vec<IQTraceBatch>,
    offsets: Vec<usize>,
    total: usize,
}

impl ConcatBatches {
    fn load(paths: &[PathBuf]) -> Result<Self> {
        let mut batches = Vec::new();
        for p in paths {
            let b = tracefile::read_batch(p)
                .with_context(|| format!("reading {}", p.display()))?;
            if let Some(first) = batches.first() {
                let f: &IQTraceBatch = first;
                if f.config.record_len != b.config.record_len
                    || f.config.fs_msps != b.config.fs_msps
                {
                    bail!("trace files have inconsistent record shapes");
                }
            }
            batches.push(b);
        }
        let mut offsets = Vec::with_capacity(batches.len());
        let mut total = 0;
        for b in &batches {
            offsets.push(total);
            total += b.n_records();
        }
        Ok(Self {
            batches,
            offsets,
            total,
        })
    }
}

impl RecordSource for ConcatBatches {
    fn n_records(&self) -> usize {
        self.total
    }
    fn record_len(&self) -> usize {
        self.batches[0].config.record_len
    }
    fn dt_ns(&self) -> f64 {
        self.batches[0].config.dt_ns()
    }
    fn fetch(
        &self,
        idx: usize,
        a: &mut Vec<num_complex::Complex32>,
        b: &mut Vec<num_complex::Complex32>,
    ) -> RecordKind {
        let which = match self.offsets.binary_search(&idx) {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        self.batches[which].fetch(idx - self.offsets[which], a, b)
    }
}

pub fn correlate_cmd(ctx: &Ctx, args: &CorrelateArgs) -> Result<()> {
    let paths: Vec<PathBuf> = if args.input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(&args.input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|x| x == "qptb").unwrap_or(false))
            .collect();
        v.sort();
        if v.is_empty() {
            bail!("no .qptb files in {}", args.input.display());
        }
        v
    } else {
        vec![args.input.clone()]
    };
    let source = ConcatBatches::load(&paths)?;

    let mut corr = ctx.cfg.corr;
    if let Some(t) = args.tau_max {
        corr.tau_max = t;
    }
    let resume_state: Option<Checkpoint> = match &args.resume {
        Some(p) if p.exists() => {
            let text = std::fs::read_to_string(p)?;
            Some(serde_json::from_str(&text).context("parsing checkpoint")?)
        }
        _ => None,
    };
    let ckpt_path = args.resume.clone();
    let mut save_err: Option<std::io::Error> = None;
    let (est, stats) = correlate_with_checkpoint(&source, &corr, resume_state, &mut |ck| {
        if let Some(p) = &ckpt_path {
            match serde_json::to_string(ck) {
                Ok(text) => {
                    if let Err(e) = std::fs::write(p, text) {
                        save_err = Some(e);
                    }
                }
                Err(e) => save_err = Some(e.into()),
            }
        }
    })?;
    if let Some(e) = save_err {
        bail!("failed to persist checkpoint: {e}");
    }

    let mut est = est;
    if args.subtract || args.normalize {
        est = subtract_background(&est)?;
    }
    if args.normalize {
        est = normalize_g2(&est, &ctx.cfg.train())?;
    }
    write_estimate(ctx, &est, &stats, args)?;
    Ok(())
}

fn write_estimate(ctx: &Ctx, est: &CorrEstimate, stats: &RunStats, args: &CorrelateArgs) -> Result<()> {
    let mut meta = ctx.cfg.summary_pairs();
    meta.push(("n_averages".into(), format!("{}", est.n_averages)));
    meta.push(("n_background".into(), format!("{}", est.n_background)));
    meta.push((
        "background_subtracted".into(),
        format!("{}", est.background_subtracted),
    ));
    if let Some(n) = &est.normalization {
        meta.push(("center_ratio".into(), format!("{}", n.center_ratio)));
        meta.push(("mean_side_height".into(), format!("{}", n.mean_side_height)));
    }
    let tau_ns = est.tau_ns();
    let rows: std::vec::IntoIter<Vec<f64>> = est
        .tau_samples()
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            vec![
                tau as f64,
                tau_ns[k],
                est.gamma1[k].re,
                est.gamma1[k].im,
                est.gamma1_bg[k].re,
                est.gamma1_bg[k].im,
                est.gamma2[k],
                est.gamma2_bg[k],
            ]
        })
        .collect::<Vec<_>>()
        .into_iter();
    let path = ctx.out_path(args.file.to_str().unwrap_or("correlation.csv"));
    csvio::write_table(
        &path,
        &meta,
        &[
            "tau_samples",
            "tau_ns",
            "re_g1",
            "im_g1",
            "re_g1_bg",
            "im_g1_bg",
            "g2",
            "g2_bg",
        ],
        &mut rows.into_iter(),
    )?;
    // run summary to stdout; output files stay bitwise deterministic
    let summary = serde_json::json!({
        "output": path.display().to_string(),
        "n_averages": est.n_averages,
        "n_background": est.n_background,
        "records": stats.records,
        "bytes": stats.bytes,
        "wall_time_s": stats.seconds,
        "throughput_mbps": stats.throughput_mbps,
    });
    println!("{summary}");
    Ok(())
}
