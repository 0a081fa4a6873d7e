//! Instrumentation processes of a path: the cumulative placement,
//! cancellation and noise fields `V¹, V², V³`, the book frozen at active
//! times, the active-count time change and the series sampled on it.
//!
//! Everything here is computed by replaying a path through the engine with an
//! observer, so the simulation hot loop carries no bookkeeping.

mod time_change;

use std::sync::Arc;

pub use time_change::{barred_index, TimeChange};

use crate::engine::{
    simulate_observed, ActiveEffect, Observer, PassiveEffect, PathRecord, RunOptions,
};
use crate::error::{Error, Result};
use crate::model::{BookState, Kernel, ModelSpec, Profile, ScalingParams, Side, StepDensity};

fn slot(side: Side) -> usize {
    match side {
        Side::Bid => 0,
        Side::Ask => 1,
    }
}

fn constant(value: f64, dx: f64) -> StepDensity {
    StepDensity::new(Arc::new(Profile::Constant { value }), dx)
}

/// `Δx Σ_j f_j²` over touched cells; for fields that start at zero this is
/// the exact `L²` norm squared.
pub fn l2_squared(field: &StepDensity) -> f64 {
    field.touched().map(|(_, v)| v * v).sum::<f64>() * field.delta_x()
}

/// `‖a - b‖²` for two books with the same initial profile.
pub fn l2_distance_squared(a: &StepDensity, b: &StepDensity) -> f64 {
    let mut ticks: Vec<i64> = a.touched().map(|(j, _)| j).chain(b.touched().map(|(j, _)| j)).collect();
    ticks.sort_unstable();
    ticks.dedup();
    ticks.iter().map(|&j| (a.get(j) - b.get(j)).powi(2)).sum::<f64>() * a.delta_x()
}

/// Sum of a zero-based field times `Δx`.
pub fn mass(field: &StepDensity) -> f64 {
    field.touched().map(|(_, v)| v).sum::<f64>() * field.delta_x()
}

/// `V¹, V², V³` of one side.
#[derive(Debug, Clone)]
pub struct FieldTriple {
    pub v1: StepDensity,
    pub v2: StepDensity,
    pub v3: StepDensity,
}

impl FieldTriple {
    fn zero(dx: f64) -> Self {
        Self { v1: constant(0.0, dx), v2: constant(0.0, dx), v3: constant(0.0, dx) }
    }

    pub fn get(&self, i: usize) -> &StepDensity {
        match i {
            1 => &self.v1,
            2 => &self.v2,
            3 => &self.v3,
            _ => panic!("field index must be 1, 2 or 3"),
        }
    }
}

/// Aux state at a snapshot time.
#[derive(Debug, Clone)]
pub struct AuxSnapshot {
    pub t: f64,
    pub fields: [FieldTriple; 2],
    /// Book at the last active time `<= t`.
    pub hat: [StepDensity; 2],
    /// Number of active events up to `t`.
    pub active_count: usize,
}

impl AuxSnapshot {
    pub fn fields(&self, side: Side) -> &FieldTriple {
        &self.fields[slot(side)]
    }

    pub fn hat(&self, side: Side) -> &StepDensity {
        &self.hat[slot(side)]
    }
}

/// State right after the `k`-th active event (`k = 0` is time zero).
#[derive(Debug, Clone)]
pub struct ActiveSample {
    pub time: f64,
    pub bid: i64,
    pub ask: i64,
    /// `‖V^i‖²` per side, `i = 1, 2, 3`.
    pub l2: [[f64; 3]; 2],
    /// `⟨V³, φ_side⟩` for the configured test kernels.
    pub pair3: [f64; 2],
    /// `∫V³` per side.
    pub mass3: [f64; 2],
    pub fields: Option<[FieldTriple; 2]>,
    pub book: Option<[StepDensity; 2]>,
}

impl ActiveSample {
    pub fn l2(&self, side: Side, i: usize) -> f64 {
        self.l2[slot(side)][i - 1]
    }

    pub fn price_tick(&self, side: Side) -> i64 {
        match side {
            Side::Bid => self.bid,
            Side::Ask => self.ask,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AuxConfig {
    /// Keep full `V` fields and books at every active time.
    pub keep_fields: bool,
    /// Test functions for `⟨V³, φ⟩` (absolute coordinates), bid then ask.
    pub kernels: Option<[Kernel; 2]>,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub n: u32,
    pub delta_x: f64,
    pub snapshots: Vec<AuxSnapshot>,
    pub active: Vec<ActiveSample>,
    /// Largest `|v_rebuilt - v| / max(1, |v|)` seen at any active time.
    pub reconstruction_error: f64,
}

impl Decomposition {
    pub fn snapshot_at(&self, t: f64) -> Result<&AuxSnapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::SnapshotMissing(t))
    }

    pub fn active_times(&self) -> Vec<f64> {
        self.active.iter().skip(1).map(|a| a.time).collect()
    }

    /// Barred state at `u`: the sample after the `⌊nu⌋`-th active event.
    pub fn barred(&self, u: f64) -> Result<&ActiveSample> {
        self.active.get(barred_index(u, self.n)).ok_or(Error::NotEnoughActiveEvents)
    }

    /// Index `k` with `τ̃_k <= t < τ̃_{k+1}`.
    pub fn hat_index(&self, t: f64) -> usize {
        self.active[1..].partition_point(|a| a.time <= t)
    }
}

struct AuxObserver {
    cfg: AuxConfig,
    dx: f64,
    fields: [FieldTriple; 2],
    prod: [StepDensity; 2],
    sum: [StepDensity; 2],
    hat: [StepDensity; 2],
    active: Vec<ActiveSample>,
    snapshots: Vec<AuxSnapshot>,
    max_err: f64,
}

impl AuxObserver {
    fn new(cfg: AuxConfig, dx: f64) -> Self {
        Self {
            cfg,
            dx,
            fields: [FieldTriple::zero(dx), FieldTriple::zero(dx)],
            prod: [constant(1.0, dx), constant(1.0, dx)],
            sum: [constant(0.0, dx), constant(0.0, dx)],
            hat: [constant(0.0, dx), constant(0.0, dx)],
            active: Vec::new(),
            snapshots: Vec::new(),
            max_err: 0.0,
        }
    }

    fn sample(&self, time: f64, state: &BookState) -> ActiveSample {
        let l2 = |k: usize| {
            let f = &self.fields[k];
            [l2_squared(&f.v1), l2_squared(&f.v2), l2_squared(&f.v3)]
        };
        let pair = |k: usize| match &self.cfg.kernels {
            Some(ks) => self.fields[k].v3.pairing(&ks[k], 0.0),
            None => 0.0,
        };
        ActiveSample {
            time,
            bid: state.bid,
            ask: state.ask,
            l2: [l2(0), l2(1)],
            pair3: [pair(0), pair(1)],
            mass3: [mass(&self.fields[0].v3), mass(&self.fields[1].v3)],
            fields: self.cfg.keep_fields.then(|| self.fields.clone()),
            book: self.cfg.keep_fields.then(|| [state.v_bid.clone(), state.v_ask.clone()]),
        }
    }

    /// Rebuilds every touched cell as `P·(v₀ + S)` and compares.
    fn check_reconstruction(&mut self, state: &BookState) {
        for side in Side::BOTH {
            let k = slot(side);
            let book = state.density(side);
            for (j, v) in book.touched() {
                let rebuilt = self.prod[k].get(j) * (book.initial(j) + self.sum[k].get(j));
                let err = (rebuilt - v).abs() / v.abs().max(1.0);
                self.max_err = self.max_err.max(err);
            }
        }
    }
}

impl Observer for AuxObserver {
    fn on_active(&mut self, time: f64, state: &BookState, _e: &ActiveEffect) {
        self.hat = [state.v_bid.clone(), state.v_ask.clone()];
        self.check_reconstruction(state);
        let s = self.sample(time, state);
        self.active.push(s);
    }

    fn on_passive(&mut self, _time: f64, _state: &BookState, e: &PassiveEffect) {
        let k = slot(e.side);
        let f = &mut self.fields[k];
        if e.h1 != 0.0 {
            *f.v1.get_mut(e.place_cell) += e.h1;
        }
        if e.h2 != 0.0 {
            *f.v2.get_mut(e.cancel_cell) += e.h2;
            *self.prod[k].get_mut(e.cancel_cell) *= 1.0 - e.h2;
        }
        if e.h1 != 0.0 {
            let p = self.prod[k].get(e.place_cell);
            *self.sum[k].get_mut(e.place_cell) += e.h1 / p;
        }
        if e.h3 != 0.0 {
            *f.v3.get_mut(e.noise_cell) += e.h3;
            let p = self.prod[k].get(e.noise_cell);
            *self.sum[k].get_mut(e.noise_cell) += e.h3 / p;
        }
    }

    fn on_snapshot(&mut self, t: f64, state: &BookState) {
        if self.active.is_empty() {
            self.hat = [state.v_bid.clone(), state.v_ask.clone()];
            let s = self.sample(0.0, state);
            self.active.push(s);
        }
        self.snapshots.push(AuxSnapshot {
            t,
            fields: self.fields.clone(),
            hat: self.hat.clone(),
            active_count: self.active.len() - 1,
        });
    }
}

/// Simulates a path and its decomposition in one pass.
pub fn simulate_with_aux(
    params: ScalingParams,
    model: &ModelSpec,
    seed: u64,
    horizon: f64,
    snapshot_times: &[f64],
    options: &RunOptions,
    cfg: AuxConfig,
) -> Result<(PathRecord, Decomposition)> {
    let mut obs = AuxObserver::new(cfg, params.delta_x);
    let path = simulate_observed(params, model, seed, horizon, snapshot_times, options, &mut obs)?;
    let dec = Decomposition {
        n: params.n,
        delta_x: obs.dx,
        snapshots: obs.snapshots,
        active: obs.active,
        reconstruction_error: obs.max_err,
    };
    Ok((path, dec))
}

fn same_snapshot(a: &crate::engine::Snapshot, b: &crate::engine::Snapshot) -> bool {
    a.bid == b.bid
        && a.ask == b.ask
        && Side::BOTH.iter().all(|&s| {
            a.density(s)
                .touched()
                .map(|(j, v)| (j, v.to_bits()))
                .eq(b.density(s).touched().map(|(j, v)| (j, v.to_bits())))
        })
}

/// Replays a recorded path and decomposes it. The replay must reproduce
/// the recorded snapshots bit for bit.
pub fn decompose(params: ScalingParams, model: &ModelSpec, path: &PathRecord, cfg: AuxConfig) -> Result<Decomposition> {
    if params.n != path.n {
        return Err(Error::InvalidArgument(format!("path was recorded at n={}, not n={}", path.n, params.n)));
    }
    let times: Vec<f64> = path.snapshots.iter().map(|s| s.t).collect();
    let options = RunOptions { rates: Some(path.rates), until_active: Some(path.counts.active) };
    let (replayed, dec) = simulate_with_aux(params, model, path.seed, path.horizon, &times, &options, cfg)?;
    for (a, b) in replayed.snapshots.iter().zip(&path.snapshots) {
        if !same_snapshot(a, b) {
            return Err(Error::SeedMismatch { time: b.t });
        }
    }
    if replayed.counts != path.counts {
        return Err(Error::SeedMismatch { time: path.end_time });
    }
    Ok(dec)
}
