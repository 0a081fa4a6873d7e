use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All scale-dependent constants of the `n`-th model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub n: u32,
    /// Passive order rate per side, `n²`.
    pub lambda: f64,
    /// Active order rate, `n`.
    pub mu: f64,
    /// Tick size, `n^{-1/2}`.
    pub delta_x: f64,
    /// Single-order volume impact, `n^{-2}`.
    pub delta_v: f64,
}

pub fn derive_scaling(n: NonZeroU32) -> ScalingParams {
    let nf = f64::from(n.get());
    ScalingParams {
        n: n.get(),
        lambda: nf * nf,
        mu: nf,
        delta_x: nf.sqrt().recip(),
        delta_v: (nf * nf).recip(),
    }
}

impl ScalingParams {
    pub fn try_new(n: u32) -> Result<Self> {
        NonZeroU32::new(n)
            .map(derive_scaling)
            .ok_or_else(|| Error::InvalidArgument("scale index n must be at least 1".into()))
    }

    /// Height added to one cell by a unit placement, `Δv/Δx = n^{-3/2}`.
    pub fn cell_impact(&self) -> f64 {
        self.delta_v / self.delta_x
    }

    /// Noise amplitude per passive event, `√Δv = 1/n`.
    pub fn noise_impact(&self) -> f64 {
        self.delta_v.sqrt()
    }

    /// Price of tick `j`.
    pub fn price_of(&self, tick: i64) -> f64 {
        tick as f64 * self.delta_x
    }

    /// Midpoint of tick cell `j`, where step values sample continuous profiles.
    pub fn cell_mid(&self, tick: i64) -> f64 {
        (tick as f64 + 0.5) * self.delta_x
    }
}

pub fn snap_to_grid(price: f64, params: &ScalingParams) -> i64 {
    (price / params.delta_x).floor() as i64
}
