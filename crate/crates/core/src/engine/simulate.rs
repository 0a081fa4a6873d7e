use super::apply::{apply_active, apply_passive, volume_statistic, ActiveEffect, PassiveEffect};
use super::stream::{Arrival, EventClock, EventKind, MarkSource, Marks, Rates};
use crate::error::{Error, Result};
use crate::model::{BookState, ModelSpec, ScalingParams, Side, StepDensity};

/// Hooks called after each event is applied.
pub trait Observer {
    fn on_active(&mut self, _time: f64, _state: &BookState, _effect: &ActiveEffect) {}
    fn on_passive(&mut self, _time: f64, _state: &BookState, _effect: &PassiveEffect) {}
    /// Called when a snapshot at `t` is taken, before any later event.
    fn on_snapshot(&mut self, _t: f64, _state: &BookState) {}
}

impl Observer for () {}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub bid: i64,
    pub ask: i64,
    pub y_bid: f64,
    pub y_ask: f64,
    pub v_bid: StepDensity,
    pub v_ask: StepDensity,
}

impl Snapshot {
    fn of(state: &BookState, t: f64, model: &ModelSpec, params: &ScalingParams) -> Self {
        Snapshot {
            t,
            bid: state.bid,
            ask: state.ask,
            y_bid: volume_statistic(state, &model.price.kernel_bid, Side::Bid, params),
            y_ask: volume_statistic(state, &model.price.kernel_ask, Side::Ask, params),
            v_bid: state.v_bid.clone(),
            v_ask: state.v_ask.clone(),
        }
    }

    pub fn density(&self, side: Side) -> &StepDensity {
        match side {
            Side::Bid => &self.v_bid,
            Side::Ask => &self.v_ask,
        }
    }

    pub fn price_tick(&self, side: Side) -> i64 {
        match side {
            Side::Bid => self.bid,
            Side::Ask => self.ask,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub active: u64,
    pub passive_bid: u64,
    pub passive_ask: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.active + self.passive_bid + self.passive_ask
    }
}

#[derive(Debug, Clone)]
pub struct PathRecord {
    pub n: u32,
    pub seed: u64,
    pub horizon: f64,
    pub rates: Rates,
    pub snapshots: Vec<Snapshot>,
    pub active_times: Vec<f64>,
    pub counts: EventCounts,
    pub moment_violations: u64,
    /// Time of the last processed event, or the horizon if the clock ran out.
    pub end_time: f64,
}

impl PathRecord {
    pub fn snapshot_at(&self, t: f64) -> Result<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::SnapshotMissing(t))
    }

    pub fn flagged(&self) -> bool {
        self.moment_violations > 0
    }
}

/// Controls beyond the model itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replace the scaling rates `(μ, λ, λ)`.
    pub rates: Option<Rates>,
    /// Keep going past the horizon until this many active events occurred.
    pub until_active: Option<u64>,
}

/// Event-by-event driver of one path.
pub struct Simulator<'a> {
    params: ScalingParams,
    model: &'a ModelSpec,
    clock: EventClock,
    marks: MarkSource,
    lookahead: Option<Arrival>,
    rates: Rates,
    state: BookState,
    guard_ticks: i64,
    counts: EventCounts,
    violations: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(params: ScalingParams, model: &'a ModelSpec, seed: u64, horizon: f64, rates: Option<Rates>) -> Result<Self> {
        model.validate()?;
        if !(horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be >= 0, got {horizon}")));
        }
        let guard_ticks = model.price.guard_ticks(&params)?;
        let rates = rates.unwrap_or_else(|| Rates::from_params(&params));
        let mut clock = EventClock::new(seed, rates, horizon);
        let lookahead = clock.next();
        let marks = MarkSource::new(seed, &model.flow);
        let mut state = BookState::from_initial(&model.initial, &params);
        let initial = marks.active(0);
        state.noise_sign_bid = initial.sign_bid;
        state.noise_sign_ask = initial.sign_ask;
        Ok(Self {
            params,
            model,
            clock,
            marks,
            lookahead,
            rates,
            state,
            guard_ticks,
            counts: EventCounts::default(),
            violations: 0,
        })
    }

    pub fn state(&self) -> &BookState {
        &self.state
    }

    pub fn params(&self) -> &ScalingParams {
        &self.params
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    pub fn moment_violations(&self) -> u64 {
        self.violations
    }

    /// Time of the event `step` would apply next.
    pub fn next_time(&self) -> Option<f64> {
        self.lookahead.map(|a| a.time)
    }

    /// Applies the next event; `None` once the clock passes the horizon.
    pub fn step<O: Observer + ?Sized>(&mut self, obs: &mut O) -> Result<Option<(f64, EventKind)>> {
        let Some(arrival) = self.lookahead else { return Ok(None) };
        self.lookahead = self.clock.next();
        let draw = self.marks.draw(arrival);
        let time = draw.arrival.time;
        match draw.marks {
            Marks::Active(m) => {
                let e = apply_active(&mut self.state, time, &m, &self.model.price, &self.params, self.guard_ticks)?;
                self.counts.active += 1;
                self.violations += u64::from(e.violations);
                obs.on_active(time, &self.state, &e);
            }
            Marks::Passive(m) => {
                let EventKind::Passive(side) = draw.arrival.kind else { unreachable!() };
                let e = apply_passive(&mut self.state, time, side, &m, &self.params);
                match side {
                    Side::Bid => self.counts.passive_bid += 1,
                    Side::Ask => self.counts.passive_ask += 1,
                }
                obs.on_passive(time, &self.state, &e);
            }
        }
        Ok(Some((time, draw.arrival.kind)))
    }

    /// Snapshot of the current state labelled with time `t`.
    pub fn snapshot(&self, t: f64) -> Snapshot {
        Snapshot::of(&self.state, t, self.model, &self.params)
    }
}

/// Runs one path and records snapshots at `snapshot_times` (the state just
/// before the first event after each time, which is the state at that time).
pub fn simulate_path(
    params: ScalingParams,
    model: &ModelSpec,
    seed: u64,
    horizon: f64,
    snapshot_times: &[f64],
    options: &RunOptions,
) -> Result<PathRecord> {
    simulate_observed(params, model, seed, horizon, snapshot_times, options, &mut ())
}

pub fn simulate_observed<O: Observer + ?Sized>(
    params: ScalingParams,
    model: &ModelSpec,
    seed: u64,
    horizon: f64,
    snapshot_times: &[f64],
    options: &RunOptions,
    obs: &mut O,
) -> Result<PathRecord> {
    let mut times: Vec<f64> = snapshot_times.to_vec();
    if times.iter().any(|t| !(0.0..=horizon).contains(t)) {
        return Err(Error::InvalidArgument(format!("snapshot times must lie in [0, {horizon}]")));
    }
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    times.dedup();

    let clock_horizon = if options.until_active.is_some() { f64::INFINITY } else { horizon };
    let mut sim = Simulator::new(params, model, seed, clock_horizon, options.rates)?;
    let mut snapshots = Vec::with_capacity(times.len());
    let mut active_times = Vec::new();
    let mut pending = times.iter().copied().peekable();
    let mut end_time = horizon;
    loop {
        let done_active = options.until_active.is_none_or(|k| sim.counts.active >= k);
        let next_time = sim.next_time();
        while let Some(&t) = pending.peek() {
            if next_time.is_none_or(|nt| nt > t) {
                snapshots.push(sim.snapshot(t));
                obs.on_snapshot(t, &sim.state);
                pending.next();
            } else {
                break;
            }
        }
        let past_horizon = next_time.is_none_or(|nt| nt > horizon);
        if past_horizon && done_active {
            break;
        }
        match sim.step(obs)? {
            Some((t, EventKind::Active)) => active_times.push(t),
            Some(_) => {}
            None => break,
        }
        end_time = sim.state.t.max(end_time);
    }
    Ok(PathRecord {
        n: params.n,
        seed,
        horizon,
        rates: sim.rates,
        snapshots,
        active_times,
        counts: sim.counts,
        moment_violations: sim.violations,
        end_time,
    })
}
