//! Experiment orchestration: one task per (n, replication), run on a rayon
//! pool, with results reported to the manifest writer.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use loblab_core::auxiliary::{l2_distance_squared, simulate_with_aux, AuxConfig, TimeChange};
use loblab_core::engine::{simulate_path, RunOptions};
use loblab_core::limit::{solve_limit, LimitModel};
use loblab_core::model::{Kernel, ScalingParams, Side};
use loblab_core::stats::{convergence_sweep, ConvergenceReport, SweepConfig, SweepTask};

use crate::config::{ExperimentConfig, Format};
use crate::io::{csv_bytes, encode_books, num, write_file, write_json, BookRecord, FileEntry};
use crate::manifest::{ManifestWriter, Recorder, RunManifest, Status, TaskRecord};
use crate::seeds::TaskSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Decompose,
    Limit,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Decompose => "decompose",
            Mode::Limit => "limit",
            Mode::Sweep => "sweep",
        }
    }
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
    /// Set by sweeps only.
    pub report: Option<ConvergenceReport>,
}

/// SHA-256 of the canonical JSON form of the effective configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("configs always serialize");
    hex::encode(Sha256::digest(json))
}

/// Output root: explicit flag, then the config, then `LOBLAB_OUT`, then `loblab-out`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os("LOBLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("loblab-out"))
}

struct Task {
    module: &'static str,
    n: u32,
    rep: u64,
    seed: TaskSeed,
}

impl Task {
    fn new(master: u64, module: &'static str, n: u32, rep: u64) -> Self {
        Self { module, n, rep, seed: TaskSeed::derive(master, module, n, rep) }
    }

    fn id(&self) -> String {
        format!("{}/n{:05}/rep{:06}", self.module, self.n, self.rep)
    }

    fn dir(&self) -> String {
        if self.n == 0 {
            format!("rep{:06}", self.rep)
        } else {
            format!("n{}/rep{:06}", self.n, self.rep)
        }
    }

    fn record(&self, files: Vec<FileEntry>) -> TaskRecord {
        TaskRecord {
            id: self.id(),
            module: self.module.into(),
            n: self.n,
            rep: self.rep,
            seed_hash: self.seed.hex(),
            seed: self.seed.seed(),
            files,
        }
    }
}

fn path_tasks(cfg: &ExperimentConfig) -> Vec<Task> {
    let mut out = Vec::new();
    for &n in &cfg.run.n_list {
        for rep in 0..cfg.run.replications as u64 {
            // decompositions replay the simulated paths, so both share seeds
            out.push(Task::new(cfg.run.seed, "simulate", n, rep));
        }
    }
    out
}

fn pairing_kernels(cfg: &ExperimentConfig) -> Option<[Kernel; 2]> {
    let first = |side| cfg.test_functions.iter().find(|t| t.side == side).map(|t| t.kernel.clone());
    Some([first(Side::Bid)?, first(Side::Ask)?])
}

fn simulate_task(cfg: &ExperimentConfig, root: &Path, t: &Task) -> Result<Vec<FileEntry>> {
    let params = ScalingParams::try_new(t.n)?;
    let times = cfg.snapshot_times();
    let path = simulate_path(params, &cfg.model, t.seed.seed(), cfg.run.horizon, &times, &RunOptions::default())?;
    let dir = t.dir();
    let mut files = Vec::new();
    if cfg.output.formats.contains(&Format::Csv) {
        let rows: Vec<Vec<String>> = path
            .snapshots
            .iter()
            .map(|s| {
                vec![
                    num(s.t),
                    s.bid.to_string(),
                    s.ask.to_string(),
                    num(params.price_of(s.bid)),
                    num(params.price_of(s.ask)),
                    num(s.y_bid),
                    num(s.y_ask),
                ]
            })
            .collect();
        let header = ["t", "bid_tick", "ask_tick", "bid", "ask", "y_bid", "y_ask"];
        files.push(write_file(root, &format!("{dir}/series.csv"), &csv_bytes("loblab.series", 1, &header, &rows)?)?);
        let rows: Vec<Vec<String>> = path.active_times.iter().map(|&x| vec![num(x)]).collect();
        files.push(write_file(root, &format!("{dir}/active.csv"), &csv_bytes("loblab.active-times", 1, &["t"], &rows)?)?);
    }
    if cfg.output.formats.contains(&Format::Binary) {
        let recs: Vec<BookRecord> = path.snapshots.iter().map(BookRecord::from_snapshot).collect();
        files.push(write_file(root, &format!("{dir}/books.bin"), &encode_books(t.n, &recs))?);
    }
    Ok(files)
}

fn decompose_task(cfg: &ExperimentConfig, root: &Path, t: &Task) -> Result<Vec<FileEntry>> {
    let params = ScalingParams::try_new(t.n)?;
    let times = cfg.snapshot_times();
    let aux = AuxConfig { keep_fields: false, kernels: pairing_kernels(cfg) };
    let (path, dec) =
        simulate_with_aux(params, &cfg.model, t.seed.seed(), cfg.run.horizon, &times, &RunOptions::default(), aux)?;
    let dir = t.dir();

    let header = [
        "k", "t", "bid_tick", "ask_tick", "v1_bid", "v2_bid", "v3_bid", "v1_ask", "v2_ask", "v3_ask", "pair3_bid",
        "pair3_ask", "mass3_bid", "mass3_ask",
    ];
    let rows: Vec<Vec<String>> = dec
        .active
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let mut r = vec![k.to_string(), num(a.time), a.bid.to_string(), a.ask.to_string()];
            for side in Side::BOTH {
                r.extend((1..=3).map(|i| num(a.l2(side, i))));
            }
            r.extend([num(a.pair3[0]), num(a.pair3[1]), num(a.mass3[0]), num(a.mass3[1])]);
            r
        })
        .collect();
    let mut files = vec![write_file(root, &format!("{dir}/active.csv"), &csv_bytes("loblab.aux-active", 1, &header, &rows)?)?];

    let tc = TimeChange::new(t.n, dec.active_times()).ok();
    let header = ["t", "active_count", "eta", "sup_eta_dev", "hat_gap_bid", "hat_gap_ask", "reconstruction_error"];
    let rows = dec
        .snapshots
        .iter()
        .map(|s| {
            let snap = path.snapshot_at(s.t)?;
            let gap = |side| l2_distance_squared(snap.density(side), s.hat(side));
            let (eta, dev) = match &tc {
                Some(tc) => (num(tc.eta(s.t)), num(tc.sup_deviation(s.t))),
                None => ("0".into(), num(s.t)),
            };
            Ok(vec![
                num(s.t),
                s.active_count.to_string(),
                eta,
                dev,
                num(gap(Side::Bid)),
                num(gap(Side::Ask)),
                num(dec.reconstruction_error),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    files.push(write_file(root, &format!("{dir}/snapshots.csv"), &csv_bytes("loblab.aux-snapshots", 1, &header, &rows)?)?);
    Ok(files)
}

fn limit_task(cfg: &ExperimentConfig, model: &LimitModel, root: &Path, t: &Task) -> Result<Vec<FileEntry>> {
    let grid = cfg.grid();
    let times = cfg.snapshot_times();
    let states = solve_limit(model, &cfg.model.initial, &grid, cfg.dt(), cfg.run.horizon, t.seed.seed(), &times)?;
    let dir = t.dir();
    let rows: Vec<Vec<String>> = states
        .iter()
        .map(|s| {
            vec![
                num(s.t),
                num(s.bid),
                num(s.ask),
                num(s.y_bid),
                num(s.y_ask),
                s.first_crossing.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    let header = ["t", "bid", "ask", "y_bid", "y_ask", "first_crossing"];
    let mut files = vec![write_file(root, &format!("{dir}/series.csv"), &csv_bytes("loblab.limit-series", 1, &header, &rows)?)?];

    let mut header = vec!["x".to_string()];
    for s in &states {
        header.push(format!("v_bid@{}", s.t));
        header.push(format!("v_ask@{}", s.t));
    }
    let rows: Vec<Vec<String>> = grid
        .nodes()
        .enumerate()
        .map(|(i, x)| {
            let mut r = vec![num(x)];
            for s in &states {
                r.push(num(s.v_bid[i]));
                r.push(num(s.v_ask[i]));
            }
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    files.push(write_file(root, &format!("{dir}/volume.csv"), &csv_bytes("loblab.limit-volume", 1, &header, &rows)?)?);
    Ok(files)
}

fn sweep_seed_module(task: SweepTask) -> (&'static str, u32, u64) {
    match task {
        SweepTask::Discrete { n, rep } => ("sweep-discrete", n, rep),
        SweepTask::Limit { rep } => ("sweep-limit", 0, rep),
        SweepTask::Bootstrap { index } => ("sweep-bootstrap", 0, index),
    }
}

fn sweep_outputs(root: &Path, report: &ConvergenceReport) -> Result<Vec<FileEntry>> {
    let mut files = vec![write_json(root, "report.json", report)?];
    let mut rows = Vec::new();
    for s in &report.per_scale {
        for (j, f) in report.functionals.iter().enumerate() {
            rows.push(vec![
                f.clone(),
                s.n.to_string(),
                s.sample_size.to_string(),
                num(s.ks[j]),
                num(s.ks_critical),
                num(s.mean[j]),
                num(s.variance[j]),
                num(report.limit.mean[j]),
                num(report.limit.variance[j]),
            ]);
        }
    }
    let header = ["functional", "n", "r", "ks", "ks_critical", "mean", "variance", "limit_mean", "limit_variance"];
    files.push(write_file(root, "ks.csv", &csv_bytes("loblab.sweep-ks", 1, &header, &rows)?)?);
    let rows: Vec<Vec<String>> = report
        .trends
        .iter()
        .map(|t| {
            vec![
                t.functional.clone(),
                t.from_n.to_string(),
                t.to_n.to_string(),
                num(t.test.ks_coarse),
                num(t.test.ks_fine),
                num(t.test.diff),
                num(t.test.se),
                num(t.test.z),
                t.test.pass.to_string(),
            ]
        })
        .collect();
    let header = ["functional", "from_n", "to_n", "ks_from", "ks_to", "diff", "se", "z", "pass"];
    files.push(write_file(root, "trends.csv", &csv_bytes("loblab.sweep-trends", 1, &header, &rows)?)?);
    Ok(files)
}

fn run_tasks(
    tasks: &[Task],
    rec: &Recorder,
    f: impl Fn(&Task) -> Result<Vec<FileEntry>> + Sync,
) -> Result<()> {
    tasks.par_iter().try_for_each(|t| {
        let files = f(t).with_context(|| format!("task {}", t.id()))?;
        rec.task(t.record(files));
        Ok(())
    })
}

fn summary(cfg: &ExperimentConfig, root: &Path, tasks: &[Task]) -> Result<FileEntry> {
    // cheap to recompute from the seeds: only event counts are needed
    let rows = tasks
        .par_iter()
        .map(|t| {
            let params = ScalingParams::try_new(t.n)?;
            let p = simulate_path(params, &cfg.model, t.seed.seed(), cfg.run.horizon, &[], &RunOptions::default())?;
            Ok(vec![
                t.n.to_string(),
                t.rep.to_string(),
                t.seed.hex(),
                p.counts.active.to_string(),
                p.counts.passive_bid.to_string(),
                p.counts.passive_ask.to_string(),
                p.moment_violations.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let header = ["n", "rep", "seed_hash", "active", "passive_bid", "passive_ask", "moment_violations"];
    write_file(root, "summary.csv", &csv_bytes("loblab.simulate-summary", 1, &header, &rows)?)
}

fn dispatch(cfg: &ExperimentConfig, mode: Mode, root: &Path, rec: &Recorder) -> Result<Option<ConvergenceReport>> {
    match mode {
        Mode::Simulate => {
            let tasks = path_tasks(cfg);
            run_tasks(&tasks, rec, |t| simulate_task(cfg, root, t))?;
            rec.file(summary(cfg, root, &tasks)?);
        }
        Mode::Decompose => {
            let tasks = path_tasks(cfg);
            run_tasks(&tasks, rec, |t| decompose_task(cfg, root, t))?;
        }
        Mode::Limit => {
            let model = LimitModel::from_spec(&cfg.model)?;
            let tasks: Vec<Task> =
                (0..cfg.run.replications as u64).map(|rep| Task::new(cfg.run.seed, "limit", 0, rep)).collect();
            run_tasks(&tasks, rec, |t| limit_task(cfg, &model, root, t))?;
        }
        Mode::Sweep => {
            let sc = SweepConfig {
                model: cfg.model.clone(),
                scales: cfg.run.n_list.clone(),
                replications: cfg.run.replications,
                times: cfg.snapshot_times(),
                test_functions: cfg.kernels(),
                grid: cfg.grid(),
                dt: cfg.dt(),
                bootstrap_resamples: cfg.sweep.bootstrap_resamples,
                alpha: cfg.sweep.alpha,
            };
            let master = cfg.run.seed;
            let seeds = |task: SweepTask| {
                let (module, n, rep) = sweep_seed_module(task);
                TaskSeed::derive(master, module, n, rep).seed()
            };
            let report = convergence_sweep(&sc, &seeds)?;
            for &n in &sc.scales {
                for rep in 0..sc.replications as u64 {
                    rec.task(Task::new(master, "sweep-discrete", n, rep).record(Vec::new()));
                }
            }
            for rep in 0..sc.replications as u64 {
                rec.task(Task::new(master, "sweep-limit", 0, rep).record(Vec::new()));
            }
            for f in sweep_outputs(root, &report)? {
                rec.file(f);
            }
            return Ok(Some(report));
        }
    }
    Ok(None)
}

/// Runs `mode` and writes outputs plus `manifest.json` under `out_dir/<mode>`.
/// `jobs = None` uses every available core.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode, out_dir: &Path, jobs: Option<usize>) -> Result<RunOutcome> {
    cfg.validate()?;
    let root = out_dir.join(mode.name());
    let writer = ManifestWriter::start(root.clone(), mode.name(), config_hash(cfg), cfg.run.seed)?;
    let rec = writer.recorder();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build()?;
    let result = pool.install(|| dispatch(cfg, mode, &root, &rec));
    drop(rec);
    match result {
        Ok(report) => {
            let manifest = writer.finish(Status::Complete, None)?;
            Ok(RunOutcome { manifest, out_dir: root, report })
        }
        Err(e) => {
            let _ = writer.finish(Status::Failed, Some(format!("{e:#}")));
            Err(e)
        }
    }
}
