//! Seeded process-variation batches.
//!
//! Every sample owns a ChaCha8 stream seeded from
//! `splitmix64(master_seed ^ splitmix64(index))`, so a draw depends only on
//! `(master_seed, index)` and batches are identical for any worker count.
//! Gaussians are truncated at ±3σ by re-drawing, never by clipping.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{run_sense, LogicOutcome, SenseMetrics};
use crate::device::{FinFetParams, Polarity};
use crate::error::{Error, Result};
use crate::netlist::{device_labels, schedule_for, CellState, TopologyKind, TopologyParams};

/// Truncation point in standard deviations.
pub const TRUNCATION: f64 = 3.0;

/// A group of parameters varied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// PTM insulator-to-metal critical voltage.
    VcImt,
    /// PTM film length; scales both film resistances.
    LPtm,
    /// Threshold voltage of every varied transistor.
    Vth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McMode {
    /// Every applicable family at once.
    #[default]
    All,
    /// One family; the others stay nominal.
    Only(Family),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: usize,
    pub master_seed: u64,
    pub mode: McMode,
    /// σ of V_C_IMT relative to its nominal value.
    pub rel_sigma_v_c_imt: f64,
    /// σ of the film length relative to its nominal value.
    pub rel_sigma_l_ptm: f64,
    /// σ of V_th for a single-fin device, relative to nominal V_th. Scaled
    /// by `1/√n_fin` per device.
    pub rel_sigma_v_th: f64,
    /// Worker threads; `None` uses the global pool. Not serialized: it
    /// never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            master_seed: 0,
            mode: McMode::All,
            rel_sigma_v_c_imt: 0.03,
            rel_sigma_l_ptm: 0.03,
            rel_sigma_v_th: 0.035,
            workers: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParams("n_samples must be at least 1".into()));
        }
        if [self.rel_sigma_v_c_imt, self.rel_sigma_l_ptm, self.rel_sigma_v_th].iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidParams("standard deviations must be non-negative".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParams("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sigma_v_c_imt(&self, params: &TopologyParams) -> f64 {
        self.rel_sigma_v_c_imt * params.ptm.v_c_imt
    }

    pub fn sigma_l_ptm(&self, params: &TopologyParams) -> f64 {
        self.rel_sigma_l_ptm * params.ptm.length
    }

    pub fn sigma_v_th(&self, base: &FinFetParams, n_fin: u32) -> f64 {
        self.rel_sigma_v_th * base.v_th / f64::from(n_fin).sqrt()
    }

    fn varies(&self, family: Family) -> bool {
        match self.mode {
            McMode::All => true,
            McMode::Only(f) => f == family,
        }
    }
}

/// Drawn values of one sample. `None`/absent entries stay nominal.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct McDraw {
    pub v_c_imt: Option<f64>,
    pub l_ptm: Option<f64>,
    /// Threshold shift per device label, added to any configured shift.
    pub delta_v_th: BTreeMap<String, f64>,
}

impl McDraw {
    pub fn apply(&self, params: &TopologyParams) -> TopologyParams {
        let mut p = params.clone();
        if let Some(v) = self.v_c_imt {
            p.ptm.v_c_imt = v;
        }
        if let Some(l) = self.l_ptm {
            p.ptm.length = l;
        }
        for (label, dv) in &self.delta_v_th {
            *p.delta_v_th.entry(label.clone()).or_insert(0.0) += dv;
        }
        p
    }
}

/// Transistors whose threshold varies: the mirror and host devices in the
/// proposed amplifiers, every transistor in the baselines.
pub fn varied_devices(kind: TopologyKind) -> Vec<&'static str> {
    match kind.host_polarity() {
        Some(Polarity::P) => vec!["P1", "P2"],
        Some(Polarity::N) => vec!["N1", "N2"],
        None => device_labels(kind),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal re-drawn until it lies within ±[`TRUNCATION`].
fn truncated_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= TRUNCATION {
            return z;
        }
    }
}

/// Parameter draw for sample `index`. Draw order is fixed: V_C_IMT, film
/// length, then thresholds in label order.
pub fn sample_parameters(config: &McConfig, kind: TopologyKind, params: &TopologyParams, index: usize) -> McDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(config.master_seed ^ splitmix64(index as u64)));
    let mut draw = McDraw::default();
    if kind.is_proposed() {
        if config.varies(Family::VcImt) {
            draw.v_c_imt = Some(params.ptm.v_c_imt + config.sigma_v_c_imt(params) * truncated_normal(&mut rng));
        }
        if config.varies(Family::LPtm) {
            draw.l_ptm = Some(params.ptm.length + config.sigma_l_ptm(params) * truncated_normal(&mut rng));
        }
    }
    if config.varies(Family::Vth) {
        for label in varied_devices(kind) {
            let base = if label.starts_with('P') { &params.pmos } else { &params.nmos };
            let sigma = config.sigma_v_th(base, params.fins_of(kind, label));
            draw.delta_v_th.insert(label.to_string(), sigma * truncated_normal(&mut rng));
        }
    }
    draw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub index: usize,
    pub draw: McDraw,
    /// Metrics of the LRS run.
    pub metrics: Option<SenseMetrics>,
    pub hrs_outcome: Option<LogicOutcome>,
    /// Why the sample does not count as a correct sensing, if it does not.
    pub error: Option<String>,
}

impl McSample {
    pub fn is_success(&self) -> bool {
        self.error.is_none()
    }
}

fn evaluate(kind: TopologyKind, config: &McConfig, params: &TopologyParams, index: usize) -> McSample {
    let draw = sample_parameters(config, kind, params, index);
    let p = draw.apply(params);
    let mut sample = McSample { index, draw, metrics: None, hrs_outcome: None, error: None };
    let run = |cell: CellState| -> Result<SenseMetrics> {
        let schedule = schedule_for(kind, &p)?;
        Ok(run_sense(kind, cell, &p, &schedule)?.metrics)
    };
    let expected = |cell: CellState| {
        if kind.expected_high(cell) == Some(true) {
            LogicOutcome::High
        } else {
            LogicOutcome::Low
        }
    };
    match run(CellState::Lrs) {
        Ok(m) => sample.metrics = Some(m),
        Err(e) => {
            sample.error = Some(format!("lrs: {e}"));
            return sample;
        }
    }
    match run(CellState::Hrs) {
        Ok(m) => sample.hrs_outcome = Some(m.logic_outcome),
        Err(e) => {
            sample.error = Some(format!("hrs: {e}"));
            return sample;
        }
    }
    let lrs = sample.metrics.as_ref().expect("set above");
    sample.error = if lrs.logic_outcome != expected(CellState::Lrs) {
        Some(format!("lrs sensed {:?}", lrs.logic_outcome).to_lowercase())
    } else if sample.hrs_outcome != Some(expected(CellState::Hrs)) {
        Some(format!("hrs sensed {:?}", sample.hrs_outcome.unwrap()).to_lowercase())
    } else if lrs.delay.is_none() {
        Some("lrs output never crosses 50%".into())
    } else {
        None
    };
    sample
}

/// Runs `config.n_samples` LRS and HRS sensing cycles of `kind`, one
/// parameter draw per sample. Failed samples are kept with their error;
/// output order is by sample index.
pub fn run_mc(kind: TopologyKind, config: &McConfig, params: &TopologyParams) -> Result<Vec<McSample>> {
    config.validate()?;
    if !kind.is_sense_amp() {
        return Err(Error::InvalidParams(format!("{kind} is not a sense amplifier")));
    }
    params.validate(kind)?;
    let work = || (0..config.n_samples).into_par_iter().map(|i| evaluate(kind, config, params, i)).collect();
    match config.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (n − 1), zero for one sample.
    pub std: f64,
    pub min: f64,
    /// Maximum: the worst case for delay, power and PDP alike.
    pub worst: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub successes: usize,
    pub failures: usize,
    pub delay: MetricSummary,
    pub power: MetricSummary,
    pub pdp: MetricSummary,
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Histogram with the Freedman–Diaconis bin width `2·IQR/∛n`, starting at
/// the minimum. Degenerate spreads get a single bin.
fn histogram(sorted: &[f64]) -> Histogram {
    const MAX_BINS: usize = 10_000;
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    let bins = if width > 0.0 && max > min { (((max - min) / width).ceil() as usize).clamp(1, MAX_BINS) } else { 1 };
    let width = if bins == 1 || (max - min) / width > MAX_BINS as f64 { (max - min) / bins as f64 } else { width };
    let edges: Vec<f64> = (0..=bins).map(|i| min + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for v in sorted {
        let k = if width > 0.0 { ((v - min) / width) as usize } else { 0 };
        counts[k.min(bins - 1)] += 1;
    }
    Histogram { edges, counts }
}

fn summarize_values(mut values: Vec<f64>) -> MetricSummary {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, std, min: values[0], worst: values[values.len() - 1], histogram: histogram(&values) }
}

/// Statistics over the successful samples.
pub fn summarize(samples: &[McSample]) -> Result<McSummary> {
    let ok: Vec<&SenseMetrics> = samples
        .iter()
        .filter(|s| s.is_success())
        .filter_map(|s| s.metrics.as_ref())
        .filter(|m| m.delay.is_some())
        .collect();
    if ok.is_empty() {
        return Err(Error::AllSamplesFailed);
    }
    Ok(McSummary {
        successes: ok.len(),
        failures: samples.len() - ok.len(),
        delay: summarize_values(ok.iter().map(|m| m.delay.unwrap()).collect()),
        power: summarize_values(ok.iter().map(|m| m.sensing_power).collect()),
        pdp: summarize_values(ok.iter().map(|m| m.pdp.unwrap()).collect()),
    })
}
