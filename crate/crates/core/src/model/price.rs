use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::scaling::ScalingParams;
use super::Side;
use crate::error::{Error, Result};

/// State seen by the drift and diffusion functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceInputs {
    pub bid: f64,
    pub ask: f64,
    pub y_bid: f64,
    pub y_ask: f64,
}

/// Rows of the 2×2 diffusion matrix, one per price, columns indexing the
/// two components of the common Brownian driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diffusion {
    pub bid: [f64; 2],
    pub ask: [f64; 2],
}

impl Diffusion {
    pub fn var_bid(&self) -> f64 {
        self.bid[0] * self.bid[0] + self.bid[1] * self.bid[1]
    }

    pub fn var_ask(&self) -> f64 {
        self.ask[0] * self.ask[0] + self.ask[1] * self.ask[1]
    }

    pub fn cov(&self) -> f64 {
        self.bid[0] * self.ask[0] + self.bid[1] * self.ask[1]
    }

    pub fn var(&self, side: Side) -> f64 {
        match side {
            Side::Bid => self.var_bid(),
            Side::Ask => self.var_ask(),
        }
    }
}

/// Named drift/diffusion families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PricePreset {
    /// `b ≡ 0, σ ≡ 0`.
    Frozen,
    Constant {
        drift_bid: f64,
        drift_ask: f64,
        sigma: Diffusion,
    },
    /// Prices drift towards the heavier side of the book:
    /// `z = tanh((Y^b - Y^a)/scale)`, `b_b = b_a = κz`,
    /// `σ = σ₀(1 + s·z²)·I`.
    VolumeImbalance {
        kappa: f64,
        sigma: f64,
        sigma_slope: f64,
        scale: f64,
    },
}

impl PricePreset {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            PricePreset::Frozen => true,
            PricePreset::Constant { drift_bid, drift_ask, sigma } => {
                [*drift_bid, *drift_ask, sigma.bid[0], sigma.bid[1], sigma.ask[0], sigma.ask[1]]
                    .iter()
                    .all(|v| v.is_finite())
            }
            PricePreset::VolumeImbalance { kappa, sigma, sigma_slope, scale } => {
                kappa.is_finite() && sigma.is_finite() && sigma_slope.is_finite() && *scale > 0.0 && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("malformed price preset {self:?}")))
        }
    }

    fn imbalance(y_bid: f64, y_ask: f64, scale: f64) -> f64 {
        ((y_bid - y_ask) / scale).tanh()
    }

    /// `(b_b, b_a)`.
    pub fn drift(&self, s: &PriceInputs) -> (f64, f64) {
        match *self {
            PricePreset::Frozen => (0.0, 0.0),
            PricePreset::Constant { drift_bid, drift_ask, .. } => (drift_bid, drift_ask),
            PricePreset::VolumeImbalance { kappa, scale, .. } => {
                let b = kappa * Self::imbalance(s.y_bid, s.y_ask, scale);
                (b, b)
            }
        }
    }

    pub fn diffusion(&self, s: &PriceInputs) -> Diffusion {
        match *self {
            PricePreset::Frozen => Diffusion { bid: [0.0; 2], ask: [0.0; 2] },
            PricePreset::Constant { sigma, .. } => sigma,
            PricePreset::VolumeImbalance { sigma, sigma_slope, scale, .. } => {
                let z = Self::imbalance(s.y_bid, s.y_ask, scale);
                let d = sigma * (1.0 + sigma_slope * z * z);
                Diffusion { bid: [d, 0.0], ask: [0.0, d] }
            }
        }
    }

    /// Whether the preset can ever produce a nonzero bid/ask covariance.
    pub fn is_diagonal(&self) -> bool {
        match self {
            PricePreset::Frozen | PricePreset::VolumeImbalance { .. } => true,
            PricePreset::Constant { sigma, .. } => sigma.cov() == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `ξ_b, ξ_a` independent given the state.
    #[default]
    Independent,
    /// Joint pmf on `{-1,0,1}²` matching the off-diagonal of `σσ'`.
    CommonFactor,
}

/// What to do when the requested moments cannot be met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampPolicy {
    /// Project onto the feasible set and count a moment violation.
    #[default]
    Clamp,
    Strict,
}

// no deny_unknown_fields: it does not combine with a flattened preset
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceMoveSpec {
    #[serde(flatten)]
    pub preset: PricePreset,
    /// Spread at or below which prices may not move inwards; `None` means `2Δx`.
    #[serde(default)]
    pub guard_epsilon: Option<f64>,
    #[serde(default = "zero_kernel")]
    pub kernel_bid: Kernel,
    #[serde(default = "zero_kernel")]
    pub kernel_ask: Kernel,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub clamp: ClampPolicy,
}

fn zero_kernel() -> Kernel {
    Kernel::Zero
}

impl PriceMoveSpec {
    pub fn new(preset: PricePreset) -> Self {
        Self {
            preset,
            guard_epsilon: None,
            kernel_bid: Kernel::Zero,
            kernel_ask: Kernel::Zero,
            coupling: Coupling::Independent,
            clamp: ClampPolicy::Clamp,
        }
    }

    pub fn frozen() -> Self {
        Self::new(PricePreset::Frozen)
    }

    pub fn with_kernels(mut self, bid: Kernel, ask: Kernel) -> Self {
        self.kernel_bid = bid;
        self.kernel_ask = ask;
        self
    }

    pub fn kernel(&self, side: Side) -> &Kernel {
        match side {
            Side::Bid => &self.kernel_bid,
            Side::Ask => &self.kernel_ask,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.preset.validate()?;
        self.kernel_bid.validate()?;
        self.kernel_ask.validate()?;
        if let Some(eps) = self.guard_epsilon {
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(Error::InvalidModel(format!("guard epsilon must be finite and >= 0, got {eps}")));
            }
        }
        if self.coupling == Coupling::Independent && !self.preset.is_diagonal() {
            return Err(Error::InvalidModel(
                "a non-diagonal diffusion needs the common-factor coupling".into(),
            ));
        }
        Ok(())
    }

    pub fn guard(&self, params: &ScalingParams) -> f64 {
        self.guard_epsilon.unwrap_or(2.0 * params.delta_x)
    }

    /// Spread guard in whole ticks: inward moves are blocked while `A - B <= ticks`.
    pub fn guard_ticks(&self, params: &ScalingParams) -> Result<i64> {
        let eps = self.guard(params);
        // tolerate representation error in eps = kΔx
        let ticks = (eps / params.delta_x + 1e-9).floor() as i64;
        if ticks < 1 {
            return Err(Error::InvalidModel(format!(
                "guard epsilon {eps} is below one tick ({}) and cannot keep the book uncrossed",
                params.delta_x
            )));
        }
        Ok(ticks)
    }
}

/// pmf on `{-1, 0, +1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pmf3 {
    pub down: f64,
    pub stay: f64,
    pub up: f64,
}

impl Pmf3 {
    pub fn mean(&self) -> f64 {
        self.up - self.down
    }

    pub fn second_moment(&self) -> f64 {
        self.up + self.down
    }

    pub fn variance(&self) -> f64 {
        self.second_moment() - self.mean().powi(2)
    }

    pub fn prob(&self, k: i8) -> f64 {
        match k {
            -1 => self.down,
            0 => self.stay,
            1 => self.up,
            _ => 0.0,
        }
    }

    /// Inverse-cdf draw from one uniform, ordering `-1, +1, 0`.
    #[inline]
    pub fn draw(&self, u: f64) -> i8 {
        if u < self.down {
            -1
        } else if u < self.down + self.up {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovePmf {
    pub pmf: Pmf3,
    /// Requested moments were not met (clamped or blocked by the spread guard).
    pub clamped: bool,
}

/// Solves `g⁺ - g⁻ = m`, `g⁺ + g⁻ = v + m²` with `m = b/√n` and blocks the
/// inward move when the spread is at most the guard.
pub fn price_move_pmf(
    drift: f64,
    variance: f64,
    side: Side,
    guarded: bool,
    params: &ScalingParams,
    policy: ClampPolicy,
) -> Result<MovePmf> {
    if !drift.is_finite() || !variance.is_finite() || variance < 0.0 {
        return Err(Error::InfeasibleMoments { side, mean: drift, second: variance });
    }
    let m = drift / f64::from(params.n).sqrt();
    let second = variance + m * m;
    let mut up = 0.5 * (second + m);
    let mut down = 0.5 * (second - m);
    let mut clamped = false;
    if down < 0.0 || up < 0.0 || second > 1.0 {
        if policy == ClampPolicy::Strict {
            return Err(Error::InfeasibleMoments { side, mean: m, second });
        }
        up = up.clamp(0.0, 1.0);
        down = down.clamp(0.0, 1.0);
        let total = up + down;
        if total > 1.0 {
            up /= total;
            down /= total;
        }
        clamped = true;
    }
    if guarded {
        let inward = match side {
            Side::Bid => &mut up,
            Side::Ask => &mut down,
        };
        if *inward > 0.0 {
            *inward = 0.0;
            clamped = true;
        }
    }
    Ok(MovePmf {
        pmf: Pmf3 { down, stay: (1.0 - up - down).max(0.0), up },
        clamped,
    })
}

/// Joint pmf of `(ξ_b, ξ_a)`; `cells[i][j]` is `P(ξ_b = i-1, ξ_a = j-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPmf {
    pub cells: [[f64; 3]; 3],
}

impl JointPmf {
    pub fn independent(bid: &Pmf3, ask: &Pmf3) -> Self {
        let mut cells = [[0.0; 3]; 3];
        for (i, cell_row) in cells.iter_mut().enumerate() {
            for (j, c) in cell_row.iter_mut().enumerate() {
                *c = bid.prob(i as i8 - 1) * ask.prob(j as i8 - 1);
            }
        }
        Self { cells }
    }

    /// Shifts mass along the corners so that `Cov(ξ_b, ξ_a)` equals `cov`
    /// while both marginals stay fixed.
    pub fn common_factor(bid: &Pmf3, ask: &Pmf3, cov: f64, policy: ClampPolicy) -> Result<(Self, bool)> {
        let mut joint = Self::independent(bid, ask);
        let c = &joint.cells;
        let lo = -4.0 * c[2][2].min(c[0][0]);
        let hi = 4.0 * c[2][0].min(c[0][2]);
        let mut target = cov;
        let mut clamped = false;
        if !(lo..=hi).contains(&cov) {
            if policy == ClampPolicy::Strict || !cov.is_finite() {
                return Err(Error::InfeasibleCoupling { target: cov, lo, hi });
            }
            target = cov.clamp(lo, hi);
            clamped = true;
        }
        let d = target / 4.0;
        joint.cells[2][2] += d;
        joint.cells[0][0] += d;
        joint.cells[2][0] -= d;
        joint.cells[0][2] -= d;
        Ok((joint, clamped))
    }

    pub fn covariance(&self) -> f64 {
        let (mut eb, mut ea, mut eba) = (0.0, 0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let (x, y) = (i as f64 - 1.0, j as f64 - 1.0);
                eb += x * self.cells[i][j];
                ea += y * self.cells[i][j];
                eba += x * y * self.cells[i][j];
            }
        }
        eba - eb * ea
    }

    #[inline]
    pub fn draw(&self, u: f64) -> (i8, i8) {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += self.cells[i][j];
                if u < acc {
                    return (i as i8 - 1, j as i8 - 1);
                }
            }
        }
        (0, 0)
    }
}
