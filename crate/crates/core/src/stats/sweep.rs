//! Discrete-versus-limit comparison across scales.

use rayon::prelude::*;
use serde::Serialize;

use super::testing::{ks_critical, ks_sorted, normal_quantile, paired_trend_test, variance_and_se, TrendTest};
use crate::engine::{simulate_path, RunOptions};
use crate::error::{Error, Result};
use crate::limit::{pairing, solve_limit, LimitGrid, LimitModel};
use crate::model::{Kernel, ModelSpec, ScalingParams, Side};
use crate::rng::{substream_seed, StreamTag};

/// A scalar read off the state at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Price { side: Side, t: f64 },
    /// `⟨v_side(t), φ⟩` with `φ = test_functions[index]`.
    Pairing { side: Side, t: f64, index: usize },
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::Price { side, t } => format!("{side}@{t}"),
            Functional::Pairing { side, t, index } => format!("<v_{side},phi{index}>@{t}"),
        }
    }

    fn t(&self) -> f64 {
        match *self {
            Functional::Price { t, .. } | Functional::Pairing { t, .. } => t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub scales: Vec<u32>,
    pub replications: usize,
    pub times: Vec<f64>,
    /// Absolute test functions paired with the volume of the given side.
    pub test_functions: Vec<(Side, Kernel)>,
    pub grid: LimitGrid,
    pub dt: f64,
    pub bootstrap_resamples: usize,
    /// Family-wise level of the trend verdicts.
    pub alpha: f64,
}

impl SweepConfig {
    pub fn functionals(&self) -> Vec<Functional> {
        let mut out = Vec::new();
        for &t in &self.times {
            out.push(Functional::Price { side: Side::Bid, t });
            out.push(Functional::Price { side: Side::Ask, t });
            for (index, (side, _)) in self.test_functions.iter().enumerate() {
                out.push(Functional::Pairing { side: *side, t, index });
            }
        }
        out
    }

    fn horizon(&self) -> f64 {
        self.times.iter().copied().fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.scales.is_empty() || self.scales.contains(&0) {
            return Err(Error::InvalidArgument("scales must be a non-empty list of positive integers".into()));
        }
        if self.replications < 2 {
            return Err(Error::InvalidArgument("need at least 2 replications".into()));
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidArgument("snapshot times must be finite and >= 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        for (_, k) in &self.test_functions {
            k.validate()?;
        }
        Ok(())
    }
}

/// Coordinates of one random task; seeds are a function of these alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepTask {
    Discrete { n: u32, rep: u64 },
    Limit { rep: u64 },
    Bootstrap { index: u64 },
}

/// Seed derivation used when the caller has no scheme of its own.
pub fn default_task_seed(master: u64, task: SweepTask) -> u64 {
    let (kind, a, b) = match task {
        SweepTask::Discrete { n, rep } => (1, u64::from(n), rep),
        SweepTask::Limit { rep } => (2, 0, rep),
        SweepTask::Bootstrap { index } => (3, 0, index),
    };
    substream_seed(substream_seed(substream_seed(master, StreamTag::Oracle, kind), StreamTag::Oracle, a), StreamTag::Oracle, b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleReport {
    pub n: u32,
    pub sample_size: usize,
    /// Per functional, in the order of `ConvergenceReport::functionals`.
    pub ks: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Two-sample KS critical value at the family-wise level.
    pub ks_critical: f64,
    /// Active events whose price-move moments had to be clamped.
    pub moment_violations: u64,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSamples {
    pub sample_size: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRecord {
    pub functional: String,
    pub from_n: u32,
    pub to_n: u32,
    #[serde(flatten)]
    pub test: TrendTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scales: Vec<u32>,
    pub replications: usize,
    pub functionals: Vec<String>,
    pub alpha: f64,
    pub bootstrap_resamples: usize,
    /// One-sided normal quantile after the Bonferroni split.
    pub z_critical: f64,
    pub per_scale: Vec<ScaleReport>,
    pub limit: LimitSamples,
    pub trends: Vec<TrendRecord>,
    pub passed: bool,
}

/// Rows are replications, columns functionals; returns sorted columns.
fn columns(rows: Vec<Vec<f64>>, width: usize) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::with_capacity(rows.len()); width];
    for row in rows {
        for (c, x) in cols.iter_mut().zip(row) {
            c.push(x);
        }
    }
    cols.iter_mut().for_each(|c| c.sort_by(f64::total_cmp));
    cols
}

fn moments(cols: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    cols.iter()
        .map(|c| (c.iter().sum::<f64>() / c.len() as f64, variance_and_se(c).0))
        .unzip()
}

fn discrete_row(cfg: &SweepConfig, fs: &[Functional], n: u32, seed: u64) -> Result<(Vec<f64>, u64)> {
    let params = ScalingParams::try_new(n)?;
    let path = simulate_path(params, &cfg.model, seed, cfg.horizon(), &cfg.times, &RunOptions::default())?;
    let row = fs
        .iter()
        .map(|f| {
            let snap = path.snapshot_at(f.t())?;
            Ok(match *f {
                Functional::Price { side, .. } => params.price_of(snap.price_tick(side)),
                Functional::Pairing { side, index, .. } => snap.density(side).pairing(&cfg.test_functions[index].1, 0.0),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((row, path.moment_violations))
}

fn limit_row(cfg: &SweepConfig, model: &LimitModel, fs: &[Functional], seed: u64) -> Result<Vec<f64>> {
    let states = solve_limit(model, &cfg.model.initial, &cfg.grid, cfg.dt, cfg.horizon(), seed, &cfg.times)?;
    fs.iter()
        .map(|f| {
            let i = cfg.times.iter().position(|&t| t == f.t()).expect("functional times come from cfg.times");
            let s = &states[i];
            Ok(match *f {
                Functional::Price { side, .. } => s.price(side),
                Functional::Pairing { side, index, .. } => pairing(&cfg.grid, s.volume(side), &cfg.test_functions[index].1),
            })
        })
        .collect()
}

/// Simulates `replications` discrete paths per scale and as many limit
/// paths, then compares every functional across scales.
pub fn convergence_sweep(cfg: &SweepConfig, seeds: &(dyn Fn(SweepTask) -> u64 + Sync)) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let fs = cfg.functionals();
    let limit_model = LimitModel::from_spec(&cfg.model)?;
    let r = cfg.replications;

    let limit_rows = (0..r as u64)
        .into_par_iter()
        .map(|rep| limit_row(cfg, &limit_model, &fs, seeds(SweepTask::Limit { rep })))
        .collect::<Result<Vec<_>>>()?;
    let limit_cols = columns(limit_rows, fs.len());
    let (lmean, lvar) = moments(&limit_cols);

    let tests = fs.len() * cfg.scales.len().saturating_sub(1);
    let family = cfg.alpha / tests.max(1) as f64;
    let mut per_scale = Vec::with_capacity(cfg.scales.len());
    for &n in &cfg.scales {
        let rows = (0..r as u64)
            .into_par_iter()
            .map(|rep| discrete_row(cfg, &fs, n, seeds(SweepTask::Discrete { n, rep })))
            .collect::<Result<Vec<_>>>()?;
        let moment_violations = rows.iter().map(|(_, v)| v).sum();
        let cols = columns(rows.into_iter().map(|(row, _)| row).collect(), fs.len());
        let ks = cols.iter().zip(&limit_cols).map(|(a, b)| ks_sorted(a, b)).collect::<Result<Vec<_>>>()?;
        let (mean, variance) = moments(&cols);
        per_scale.push(ScaleReport {
            n,
            sample_size: r,
            ks,
            mean,
            variance,
            ks_critical: ks_critical(family, r, r),
            moment_violations,
            samples: cols,
        });
    }

    let z_critical = normal_quantile(1.0 - family);
    let mut jobs = Vec::new();
    for (k, pair) in per_scale.windows(2).enumerate() {
        for j in 0..fs.len() {
            jobs.push((k, j, pair[0].n, pair[1].n));
        }
    }
    let trends = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(k, j, from_n, to_n))| {
            let seed = seeds(SweepTask::Bootstrap { index: i as u64 });
            let test = paired_trend_test(
                &per_scale[k].samples[j],
                &per_scale[k + 1].samples[j],
                &limit_cols[j],
                cfg.bootstrap_resamples,
                z_critical,
                seed,
            )?;
            Ok(TrendRecord { functional: fs[j].name(), from_n, to_n, test })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = trends.iter().all(|t| t.test.pass);

    Ok(ConvergenceReport {
        scales: cfg.scales.clone(),
        replications: r,
        functionals: fs.iter().map(Functional::name).collect(),
        alpha: cfg.alpha,
        bootstrap_resamples: cfg.bootstrap_resamples,
        z_critical,
        per_scale,
        limit: LimitSamples { sample_size: r, mean: lmean, variance: lvar, samples: limit_cols },
        trends,
        passed,
    })
}
