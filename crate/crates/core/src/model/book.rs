use std::sync::Arc;

use super::initial::{InitialCondition, Profile};
use super::kernel::Kernel;
use super::scaling::{snap_to_grid, ScalingParams};
use super::Side;

/// Step function on the tick grid that defaults to the initial profile.
///
/// Semantically a sparse map tick -> value: cells never written read as
/// `v₀(cell midpoint)`. Storage is a dense window that grows on demand, which
/// is cheap because a path only ever visits a band of a few `M/Δx` cells and
/// gives deterministic iteration order.
#[derive(Debug, Clone)]
pub struct StepDensity {
    profile: Arc<Profile>,
    delta_x: f64,
    origin: i64,
    values: Vec<f64>,
    touched: Vec<bool>,
}

impl StepDensity {
    pub fn new(profile: Arc<Profile>, delta_x: f64) -> Self {
        Self { profile, delta_x, origin: 0, values: Vec::new(), touched: Vec::new() }
    }

    pub fn delta_x(&self) -> f64 {
        self.delta_x
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Value the cell holds before any event writes it.
    #[inline]
    pub fn initial(&self, tick: i64) -> f64 {
        self.profile.eval((tick as f64 + 0.5) * self.delta_x)
    }

    #[inline]
    fn slot(&self, tick: i64) -> Option<usize> {
        let i = tick - self.origin;
        (i >= 0 && (i as usize) < self.values.len()).then_some(i as usize)
    }

    #[inline]
    pub fn get(&self, tick: i64) -> f64 {
        match self.slot(tick) {
            Some(i) => self.values[i],
            None => self.initial(tick),
        }
    }

    pub fn is_touched(&self, tick: i64) -> bool {
        self.slot(tick).is_some_and(|i| self.touched[i])
    }

    fn reserve(&mut self, tick: i64) {
        if self.values.is_empty() {
            // start with some slack on both sides so early growth is rare
            let pad = 64;
            self.origin = tick - pad;
            self.values = (0..2 * pad + 1).map(|k| self.initial(self.origin + k)).collect();
            self.touched = vec![false; self.values.len()];
            return;
        }
        if tick < self.origin {
            let extra = ((self.origin - tick) as usize).max(self.values.len() / 2);
            let new_origin = self.origin - extra as i64;
            let mut front: Vec<f64> = (0..extra as i64).map(|k| self.initial(new_origin + k)).collect();
            front.extend_from_slice(&self.values);
            self.values = front;
            let mut flags = vec![false; extra];
            flags.extend_from_slice(&self.touched);
            self.touched = flags;
            self.origin = new_origin;
        } else {
            let end = self.origin + self.values.len() as i64;
            if tick >= end {
                let extra = ((tick - end + 1) as usize).max(self.values.len() / 2);
                let tail: Vec<f64> = (0..extra as i64).map(|k| self.initial(end + k)).collect();
                self.values.extend(tail);
                self.touched.resize(self.values.len(), false);
            }
        }
    }

    #[inline]
    pub fn get_mut(&mut self, tick: i64) -> &mut f64 {
        if self.slot(tick).is_none() {
            self.reserve(tick);
        }
        let i = (tick - self.origin) as usize;
        self.touched[i] = true;
        &mut self.values[i]
    }

    pub fn set(&mut self, tick: i64, value: f64) {
        *self.get_mut(tick) = value;
    }

    /// Touched cells in increasing tick order.
    pub fn touched(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.touched)
            .enumerate()
            .filter(|(_, (_, &t))| t)
            .map(move |(i, (&v, _))| (self.origin + i as i64, v))
    }

    pub fn touched_count(&self) -> usize {
        self.touched.iter().filter(|&&t| t).count()
    }

    /// `Σ_j v_j φ(x_j - shift) Δx` with `x_j` the cell midpoints, over the
    /// cells meeting the shifted support of `φ`.
    pub fn pairing(&self, kernel: &Kernel, shift: f64) -> f64 {
        let Some((lo, hi)) = kernel.support() else { return 0.0 };
        let dx = self.delta_x;
        let first = ((lo + shift) / dx).floor() as i64 - 1;
        let last = ((hi + shift) / dx).ceil() as i64 + 1;
        (first..=last)
            .map(|j| self.get(j) * kernel.eval((j as f64 + 0.5) * dx - shift))
            .sum::<f64>()
            * dx
    }
}

/// State of the `n`-th book. Prices are integer tick indices.
#[derive(Debug, Clone)]
pub struct BookState {
    pub t: f64,
    pub bid: i64,
    pub ask: i64,
    /// Best prices at the last active event, which place passive orders.
    pub anchor_bid: i64,
    pub anchor_ask: i64,
    /// Noise signs `ξ̃` held between active events.
    pub noise_sign_bid: i8,
    pub noise_sign_ask: i8,
    pub v_bid: StepDensity,
    pub v_ask: StepDensity,
}

impl BookState {
    pub fn from_initial(ic: &InitialCondition, params: &ScalingParams) -> Self {
        let bid = snap_to_grid(ic.bid, params);
        let ask = snap_to_grid(ic.ask, params);
        Self {
            t: 0.0,
            bid,
            ask,
            anchor_bid: bid,
            anchor_ask: ask,
            noise_sign_bid: 1,
            noise_sign_ask: 1,
            v_bid: StepDensity::new(Arc::new(ic.v_bid.clone()), params.delta_x),
            v_ask: StepDensity::new(Arc::new(ic.v_ask.clone()), params.delta_x),
        }
    }

    pub fn price(&self, side: Side) -> i64 {
        match side {
            Side::Bid => self.bid,
            Side::Ask => self.ask,
        }
    }

    pub fn anchor(&self, side: Side) -> i64 {
        match side {
            Side::Bid => self.anchor_bid,
            Side::Ask => self.anchor_ask,
        }
    }

    pub fn noise_sign(&self, side: Side) -> i8 {
        match side {
            Side::Bid => self.noise_sign_bid,
            Side::Ask => self.noise_sign_ask,
        }
    }

    pub fn density(&self, side: Side) -> &StepDensity {
        match side {
            Side::Bid => &self.v_bid,
            Side::Ask => &self.v_ask,
        }
    }

    pub fn density_mut(&mut self, side: Side) -> &mut StepDensity {
        match side {
            Side::Bid => &mut self.v_bid,
            Side::Ask => &mut self.v_ask,
        }
    }

    pub fn bid_price(&self) -> f64 {
        self.bid as f64 * self.v_bid.delta_x
    }

    pub fn ask_price(&self) -> f64 {
        self.ask as f64 * self.v_ask.delta_x
    }
}
