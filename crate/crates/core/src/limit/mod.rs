//! Euler–Maruyama integration of the limiting price SDE coupled to the
//! volume equation, written in absolute price coordinates:
//!
//! ```text
//! dv(x) = (p f^P(x-P) - c f^C(x-P) v(x)) dt + √2 e f^N(x-P) dW
//! dP    = b(B, A, Y^b, Y^a) dt + σ_P(B, A, Y^b, Y^a) dW̃
//! Y     = ∫ v(x) φ(x-P) dx
//! ```
//!
//! with `p, c, e` the mean placement, cancellation and noise sizes of the side.

mod spde;

use rand::Rng;
use rand_distr::StandardNormal;

pub use spde::{SpdeOracle, SpdeState};

use crate::error::{Error, Result};
use crate::model::{EventDensity, InitialCondition, Kernel, ModelSpec, PriceInputs, PriceMoveSpec, Side};
use crate::rng::{substream, StreamRng, StreamTag};

/// Uniform spatial grid `x_i = lo + i h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitGrid {
    pub lo: f64,
    pub h: f64,
    pub len: usize,
}

impl LimitGrid {
    pub fn new(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidArgument(format!("bad grid [{lo}, {hi}] with spacing {h}")));
        }
        let len = ((hi - lo) / h).round() as usize + 1;
        Ok(Self { lo, h, len })
    }

    pub fn hi(&self) -> f64 {
        self.x(self.len - 1)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.x(i))
    }

    /// Indices of the nodes inside `[a, b]`.
    pub fn range(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let i0 = ((a - self.lo) / self.h).ceil().max(0.0) as usize;
        let i1 = (((b - self.lo) / self.h).floor() + 1.0).clamp(0.0, self.len as f64) as usize;
        i0.min(i1)..i1
    }

    /// Linear interpolation of nodal values; `None` outside the grid.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Option<f64> {
        let s = (x - self.lo) / self.h;
        if s < -1e-9 || s > (self.len - 1) as f64 + 1e-9 {
            return None;
        }
        let s = s.clamp(0.0, (self.len - 1) as f64);
        let i = (s.floor() as usize).min(self.len - 2);
        let w = s - i as f64;
        Some(values[i] * (1.0 - w) + values[i + 1] * w)
    }
}

/// Coefficients of one side of the limit equation.
#[derive(Debug, Clone)]
pub struct SideCoefficients {
    pub place: f64,
    pub cancel: f64,
    pub noise: f64,
    pub f_place: EventDensity,
    pub f_cancel: EventDensity,
    pub f_noise: EventDensity,
    pub kernel: Kernel,
}

impl SideCoefficients {
    /// Drift and diffusion of `v(x)` at relative position `r = x - P`.
    #[inline]
    fn coefficients(&self, r: f64) -> (f64, f64, f64) {
        (
            self.place * self.f_place.pdf(r),
            self.cancel * self.f_cancel.pdf(r),
            std::f64::consts::SQRT_2 * self.noise * self.f_noise.pdf(r),
        )
    }
}

#[derive(Debug, Clone)]
pub struct LimitModel {
    pub bid: SideCoefficients,
    pub ask: SideCoefficients,
    pub price: PriceMoveSpec,
    pub support_bound: f64,
}

impl LimitModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let side = |s: Side| {
            let f = spec.flow.side(s);
            SideCoefficients {
                place: f.place.size.mean(),
                cancel: f.cancel.size.mean(),
                noise: f.noise.size.mean(),
                f_place: f.place.location.clone(),
                f_cancel: f.cancel.location.clone(),
                f_noise: f.noise.location.clone(),
                kernel: spec.price.kernel(s).clone(),
            }
        };
        Ok(Self {
            bid: side(Side::Bid),
            ask: side(Side::Ask),
            price: spec.price.clone(),
            support_bound: spec.flow.support_bound,
        })
    }

    pub fn side(&self, side: Side) -> &SideCoefficients {
        match side {
            Side::Bid => &self.bid,
            Side::Ask => &self.ask,
        }
    }

    /// Half-width around a price that must stay inside the grid.
    pub fn reach(&self) -> f64 {
        let k = |k: &Kernel| k.support().map_or(0.0, |(lo, hi)| lo.abs().max(hi.abs()));
        self.support_bound.max(k(&self.bid.kernel)).max(k(&self.ask.kernel))
    }
}

/// Brownian increments of one step: the 2-d price driver and the two
/// scalar volume drivers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Increments {
    pub w_price: [f64; 2],
    pub w_bid: f64,
    pub w_ask: f64,
}

impl Increments {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> Self {
        let s = dt.sqrt();
        let mut z = || -> f64 { rng.sample::<f64, _>(StandardNormal) * s };
        Self { w_price: [z(), z()], w_bid: z(), w_ask: z() }
    }

    pub fn add(&self, o: &Increments) -> Increments {
        Increments {
            w_price: [self.w_price[0] + o.w_price[0], self.w_price[1] + o.w_price[1]],
            w_bid: self.w_bid + o.w_bid,
            w_ask: self.w_ask + o.w_ask,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub t: f64,
    pub bid: f64,
    pub ask: f64,
    pub y_bid: f64,
    pub y_ask: f64,
    pub v_bid: Vec<f64>,
    pub v_ask: Vec<f64>,
    /// Accumulated drivers `(W̃, W_b, W_a)`.
    pub w: Increments,
    /// First step time at which `B > A`, if any.
    pub first_crossing: Option<f64>,
}

impl LimitState {
    pub fn initial(ic: &InitialCondition, grid: &LimitGrid, model: &LimitModel) -> Self {
        let v_bid: Vec<f64> = grid.nodes().map(|x| ic.v_bid.eval(x)).collect();
        let v_ask: Vec<f64> = grid.nodes().map(|x| ic.v_ask.eval(x)).collect();
        let mut s = Self {
            t: 0.0,
            bid: ic.bid,
            ask: ic.ask,
            y_bid: 0.0,
            y_ask: 0.0,
            v_bid,
            v_ask,
            w: Increments::default(),
            first_crossing: None,
        };
        s.y_bid = quadrature(grid, &s.v_bid, &model.bid.kernel, s.bid);
        s.y_ask = quadrature(grid, &s.v_ask, &model.ask.kernel, s.ask);
        s
    }

    pub fn price(&self, side: Side) -> f64 {
        match side {
            Side::Bid => self.bid,
            Side::Ask => self.ask,
        }
    }

    pub fn volume(&self, side: Side) -> &[f64] {
        match side {
            Side::Bid => &self.v_bid,
            Side::Ask => &self.v_ask,
        }
    }

    pub fn y(&self, side: Side) -> f64 {
        match side {
            Side::Bid => self.y_bid,
            Side::Ask => self.y_ask,
        }
    }
}

/// Trapezoidal `∫ v(x) φ(x - shift) dx` on the grid.
pub fn quadrature(grid: &LimitGrid, v: &[f64], kernel: &Kernel, shift: f64) -> f64 {
    let Some((lo, hi)) = kernel.support() else { return 0.0 };
    let r = grid.range(lo + shift, hi + shift);
    if r.is_empty() {
        return 0.0;
    }
    let last = r.end - 1;
    let first = r.start;
    r.map(|i| {
        let w = if i == first || i == last { 0.5 } else { 1.0 };
        w * v[i] * kernel.eval(grid.x(i) - shift)
    })
    .sum::<f64>()
        * grid.h
}

/// `∫ v(x) φ(x) dx` for an absolute test function.
pub fn pairing(grid: &LimitGrid, v: &[f64], kernel: &Kernel) -> f64 {
    quadrature(grid, v, kernel, 0.0)
}

fn check_reach(state: &LimitState, grid: &LimitGrid, reach: f64) -> Result<()> {
    for p in [state.bid, state.ask] {
        if !p.is_finite() || p - reach < grid.lo || p + reach > grid.hi() {
            return Err(Error::GridBreach { time: state.t, price: p, radius: reach, lo: grid.lo, hi: grid.hi() });
        }
    }
    Ok(())
}

fn step_volume(v: &mut [f64], grid: &LimitGrid, side: &SideCoefficients, price: f64, bound: f64, dt: f64, dw: f64) {
    for i in grid.range(price - bound, price + bound) {
        let (p, c, e) = side.coefficients(grid.x(i) - price);
        v[i] += (p - c * v[i]) * dt + e * dw;
    }
}

/// One Euler–Maruyama step with all coefficients frozen at the pre-step state.
pub fn em_step(state: &mut LimitState, dt: f64, inc: &Increments, model: &LimitModel, grid: &LimitGrid) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    check_reach(state, grid, model.reach())?;
    let inputs = PriceInputs { bid: state.bid, ask: state.ask, y_bid: state.y_bid, y_ask: state.y_ask };
    let (b_bid, b_ask) = model.price.preset.drift(&inputs);
    let sigma = model.price.preset.diffusion(&inputs);
    let m = model.support_bound;
    step_volume(&mut state.v_bid, grid, &model.bid, state.bid, m, dt, inc.w_bid);
    step_volume(&mut state.v_ask, grid, &model.ask, state.ask, m, dt, inc.w_ask);
    let [w0, w1] = inc.w_price;
    state.bid += b_bid * dt + sigma.bid[0] * w0 + sigma.bid[1] * w1;
    state.ask += b_ask * dt + sigma.ask[0] * w0 + sigma.ask[1] * w1;
    state.t += dt;
    state.w = state.w.add(inc);
    if state.first_crossing.is_none() && state.bid > state.ask {
        state.first_crossing = Some(state.t);
    }
    check_reach(state, grid, model.reach())?;
    state.y_bid = quadrature(grid, &state.v_bid, &model.bid.kernel, state.bid);
    state.y_ask = quadrature(grid, &state.v_ask, &model.ask.kernel, state.ask);
    Ok(())
}

/// Step indices at which to record the requested snapshot times.
fn snapshot_steps(dt: f64, steps: usize, times: &[f64]) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let k = (t / dt).round();
            if (k * dt - t).abs() > 1e-9 * t.max(1.0) || k < 0.0 || k as usize > steps {
                Err(Error::InvalidArgument(format!("snapshot time {t} is not on the step grid (dt = {dt})")))
            } else {
                Ok(k as usize)
            }
        })
        .collect()
}

/// Integrates with explicitly supplied increments (one per step); the step
/// count is `increments.len()`. Returns the states at the snapshot times.
pub fn solve_with_increments(
    model: &LimitModel,
    initial: &InitialCondition,
    grid: &LimitGrid,
    dt: f64,
    increments: &[Increments],
    snapshot_times: &[f64],
) -> Result<Vec<LimitState>> {
    let at = snapshot_steps(dt, increments.len(), snapshot_times)?;
    let mut state = LimitState::initial(initial, grid, model);
    check_reach(&state, grid, model.reach())?;
    let mut out: Vec<Option<LimitState>> = vec![None; at.len()];
    let mut record = |k: usize, s: &LimitState| {
        for (slot, &want) in out.iter_mut().zip(&at) {
            if want == k {
                *slot = Some(s.clone());
            }
        }
    };
    record(0, &state);
    for (k, inc) in increments.iter().enumerate() {
        em_step(&mut state, dt, inc, model, grid)?;
        record(k + 1, &state);
    }
    Ok(out.into_iter().map(|s| s.expect("every snapshot step is visited")).collect())
}

/// Brownian increments of one trajectory, from its own substream.
pub fn brownian_increments(seed: u64, dt: f64, steps: usize) -> Vec<Increments> {
    let mut rng: StreamRng = substream(seed, StreamTag::LimitBrownian, 0);
    (0..steps).map(|_| Increments::sample(&mut rng, dt)).collect()
}

/// Sums consecutive pairs: the same Brownian path at twice the step.
pub fn coarsen(fine: &[Increments]) -> Vec<Increments> {
    fine.chunks_exact(2).map(|p| p[0].add(&p[1])).collect()
}

/// Default step `T/2048`.
pub fn default_dt(horizon: f64) -> f64 {
    horizon / 2048.0
}

pub fn solve_limit(
    model: &LimitModel,
    initial: &InitialCondition,
    grid: &LimitGrid,
    dt: f64,
    horizon: f64,
    seed: u64,
    snapshot_times: &[f64],
) -> Result<Vec<LimitState>> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be >= 0, got {horizon}")));
    }
    let steps = (horizon / dt).round() as usize;
    let inc = brownian_increments(seed, dt, steps);
    solve_with_increments(model, initial, grid, dt, &inc, snapshot_times)
}

/// `U(x) = v(x + P)` at the relative positions `rel`.
pub fn relative_volume(state: &LimitState, grid: &LimitGrid, side: Side, rel: &[f64]) -> Result<Vec<f64>> {
    let p = state.price(side);
    rel.iter()
        .map(|&r| {
            grid.interpolate(state.volume(side), r + p).ok_or(Error::GridBreach {
                time: state.t,
                price: p,
                radius: r.abs(),
                lo: grid.lo,
                hi: grid.hi(),
            })
        })
        .collect()
}
