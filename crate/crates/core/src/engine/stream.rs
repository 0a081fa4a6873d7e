use rand::Rng;
use rand_distr::Exp1;

use crate::model::{OrderFlowSpec, ScalingParams, Side, SizeSampler};
use crate::rng::{substream, StreamRng, StreamTag};

/// Arrival rates of the three independent Poisson clocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub active: f64,
    pub passive_bid: f64,
    pub passive_ask: f64,
}

impl Rates {
    pub fn from_params(params: &ScalingParams) -> Self {
        Self { active: params.mu, passive_bid: params.lambda, passive_ask: params.lambda }
    }

    pub fn total(&self) -> f64 {
        self.active + self.passive_bid + self.passive_ask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Active,
    Passive(Side),
}

/// One arrival of the merged clock. `index` counts events of this kind,
/// starting at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub kind: EventKind,
    pub index: u64,
}

/// Merged Poisson clock: exponential gaps at the total rate, each arrival
/// assigned a kind in proportion to its rate.
#[derive(Debug, Clone)]
pub struct EventClock {
    rng: StreamRng,
    rates: Rates,
    horizon: f64,
    now: f64,
    counts: [u64; 3],
}

impl EventClock {
    pub fn new(seed: u64, rates: Rates, horizon: f64) -> Self {
        Self { rng: substream(seed, StreamTag::Clock, 0), rates, horizon, now: 0.0, counts: [0; 3] }
    }

    pub fn active_count(&self) -> u64 {
        self.counts[0]
    }

    pub fn passive_count(&self, side: Side) -> u64 {
        match side {
            Side::Bid => self.counts[1],
            Side::Ask => self.counts[2],
        }
    }
}

impl Iterator for EventClock {
    type Item = Arrival;

    fn next(&mut self) -> Option<Arrival> {
        let total = self.rates.total();
        if total <= 0.0 {
            return None;
        }
        let gap: f64 = self.rng.sample(Exp1);
        let time = self.now + gap / total;
        if time > self.horizon {
            self.now = self.horizon;
            return None;
        }
        self.now = time;
        let u = self.rng.random::<f64>() * total;
        let (slot, kind) = if u < self.rates.active {
            (0, EventKind::Active)
        } else if u < self.rates.active + self.rates.passive_bid {
            (1, EventKind::Passive(Side::Bid))
        } else {
            (2, EventKind::Passive(Side::Ask))
        };
        self.counts[slot] += 1;
        Some(Arrival { time, kind, index: self.counts[slot] })
    }
}

/// Marks `(ω^C, ω^P, ω^N, π^C, π^P, π^N)` of one passive event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveMarks {
    pub cancel_size: f64,
    pub place_size: f64,
    pub noise_size: f64,
    pub cancel_level: f64,
    pub place_level: f64,
    pub noise_level: f64,
}

/// Uniforms driving the price move and the fresh noise signs `ξ̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveMarks {
    pub u_bid: f64,
    pub u_ask: f64,
    pub u_joint: f64,
    pub sign_bid: i8,
    pub sign_ask: i8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marks {
    Active(ActiveMarks),
    Passive(PassiveMarks),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventDraw {
    pub arrival: Arrival,
    pub marks: Marks,
}

#[derive(Debug, Clone)]
struct SideSamplers {
    cancel: SizeSampler,
    place: SizeSampler,
    noise: SizeSampler,
}

/// Draws the marks of any event from its own substream, so marks depend
/// only on `(seed, kind, index)`.
#[derive(Debug, Clone)]
pub struct MarkSource {
    seed: u64,
    flow: OrderFlowSpec,
    bid: SideSamplers,
    ask: SideSamplers,
}

fn sign<R: Rng>(rng: &mut R) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

impl MarkSource {
    pub fn new(seed: u64, flow: &OrderFlowSpec) -> Self {
        let prep = |side: Side| {
            let f = flow.side(side);
            SideSamplers { cancel: f.cancel.size.sampler(), place: f.place.size.sampler(), noise: f.noise.size.sampler() }
        };
        Self { seed, flow: flow.clone(), bid: prep(Side::Bid), ask: prep(Side::Ask) }
    }

    /// Active marks for the `index`-th active event; index 0 gives the noise
    /// signs in force from time 0.
    pub fn active(&self, index: u64) -> ActiveMarks {
        let mut rng = substream(self.seed, StreamTag::Active, index);
        ActiveMarks {
            u_bid: rng.random(),
            u_ask: rng.random(),
            u_joint: rng.random(),
            sign_bid: sign(&mut rng),
            sign_ask: sign(&mut rng),
        }
    }

    pub fn passive(&self, side: Side, index: u64) -> PassiveMarks {
        let (tag, s) = match side {
            Side::Bid => (StreamTag::PassiveBid, &self.bid),
            Side::Ask => (StreamTag::PassiveAsk, &self.ask),
        };
        let f = self.flow.side(side);
        let mut rng = substream(self.seed, tag, index);
        PassiveMarks {
            cancel_size: s.cancel.sample(&mut rng),
            place_size: s.place.sample(&mut rng),
            noise_size: s.noise.sample(&mut rng),
            cancel_level: f.cancel.location.sample(&mut rng),
            place_level: f.place.location.sample(&mut rng),
            noise_level: f.noise.location.sample(&mut rng),
        }
    }

    pub fn draw(&self, arrival: Arrival) -> EventDraw {
        let marks = match arrival.kind {
            EventKind::Active => Marks::Active(self.active(arrival.index)),
            EventKind::Passive(side) => Marks::Passive(self.passive(side, arrival.index)),
        };
        EventDraw { arrival, marks }
    }
}

/// Time-ordered events with marks attached on consumption.
#[derive(Debug, Clone)]
pub struct EventStream {
    clock: EventClock,
    marks: MarkSource,
}

impl EventStream {
    pub fn new(seed: u64, rates: Rates, flow: &OrderFlowSpec, horizon: f64) -> Self {
        Self { clock: EventClock::new(seed, rates, horizon), marks: MarkSource::new(seed, flow) }
    }

    pub fn marks(&self) -> &MarkSource {
        &self.marks
    }

    pub fn clock(&self) -> &EventClock {
        &self.clock
    }
}

impl Iterator for EventStream {
    type Item = EventDraw;

    fn next(&mut self) -> Option<EventDraw> {
        self.clock.next().map(|a| self.marks.draw(a))
    }
}

pub fn build_event_stream(params: &ScalingParams, flow: &OrderFlowSpec, seed: u64, horizon: f64) -> EventStream {
    EventStream::new(seed, Rates::from_params(params), flow, horizon)
}
