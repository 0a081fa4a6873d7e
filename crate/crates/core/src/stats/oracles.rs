//! Closed-form laws of two competing Poisson clocks, with brute-force
//! samplers built on the engine's own event clock.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::engine::{EventClock, EventKind, Rates};
use crate::error::{Error, Result};
use crate::rng::{substream_seed, StreamTag};

fn check_rates(l1: f64, l2: f64) -> Result<()> {
    if !(l1 > 0.0 && l1.is_finite() && l2 > 0.0 && l2.is_finite()) {
        return Err(Error::InvalidArgument(format!("rates must be positive and finite, got ({l1}, {l2})")));
    }
    Ok(())
}

/// Law of `N₂(T_α)`, the number of rate-`λ₂` arrivals before the `α`-th
/// arrival of an independent rate-`λ₁` clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NBOracle {
    pub alpha: u32,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl NBOracle {
    pub fn new(alpha: u32, lambda1: f64, lambda2: f64) -> Result<Self> {
        check_rates(lambda1, lambda2)?;
        if alpha == 0 {
            return Err(Error::InvalidArgument("alpha must be at least 1".into()));
        }
        Ok(Self { alpha, lambda1, lambda2 })
    }

    /// `λ₂ / (λ₁ + λ₂)`
    pub fn p(&self) -> f64 {
        self.lambda2 / (self.lambda1 + self.lambda2)
    }

    pub fn ln_pmf(&self, l: u64) -> f64 {
        let a = f64::from(self.alpha);
        let l = l as f64;
        ln_gamma(l + a) - ln_gamma(a) - ln_gamma(l + 1.0)
            + l * (self.lambda2.ln() - (self.lambda1 + self.lambda2).ln())
            + a * (self.lambda1.ln() - (self.lambda1 + self.lambda2).ln())
    }

    pub fn pmf(&self, l: u64) -> f64 {
        self.ln_pmf(l).exp()
    }

    /// `P(N ≥ l)`, through the regularized incomplete beta function.
    pub fn tail(&self, l: u64) -> f64 {
        if l == 0 {
            return 1.0;
        }
        beta_reg(l as f64, f64::from(self.alpha), self.p())
    }

    /// `E[N(N-1)…(N-k+1)] = α(α+1)…(α+k-1) (λ₂/λ₁)^k`
    pub fn factorial_moment(&self, k: u32) -> f64 {
        let a = f64::from(self.alpha);
        (0..k).map(|i| (a + f64::from(i)) * self.lambda2 / self.lambda1).product()
    }

    pub fn mean(&self) -> f64 {
        self.factorial_moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.factorial_moment(2) + m - m * m
    }

    /// One draw per trial, each from its own clock substream.
    pub fn simulate(&self, seed: u64, trials: usize) -> Vec<u64> {
        let rates = Rates { active: self.lambda1, passive_bid: self.lambda2, passive_ask: 0.0 };
        (0..trials as u64)
            .map(|i| {
                let mut clock = EventClock::new(substream_seed(seed, StreamTag::Oracle, i), rates, f64::INFINITY);
                let alpha = u64::from(self.alpha);
                for a in clock.by_ref() {
                    if a.kind == EventKind::Active && a.index == alpha {
                        break;
                    }
                }
                clock.passive_count(crate::model::Side::Bid)
            })
            .collect()
    }
}

/// `(E[G], E[G(G-1)])` for `G = N₂(t) - N₂(T_{N₁(t)})`, the rate-`λ₂`
/// arrivals since the last rate-`λ₁` arrival (or since 0).
pub fn beta_gap_moments(lambda1: f64, lambda2: f64, t: f64) -> Result<(f64, f64)> {
    check_rates(lambda1, lambda2)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be finite and >= 0, got {t}")));
    }
    let r = lambda2 / lambda1;
    let e = (-lambda1 * t).exp();
    // the gap length L is Exp(λ₁) capped at t, so E[L²] = 2(1 - (1+λ₁t)e^{-λ₁t})/λ₁²
    Ok((r * (1.0 - e), 2.0 * r * r * (1.0 - (1.0 + lambda1 * t) * e)))
}

pub fn simulate_beta_gap(lambda1: f64, lambda2: f64, t: f64, seed: u64, trials: usize) -> Vec<u64> {
    let rates = Rates { active: lambda1, passive_bid: lambda2, passive_ask: 0.0 };
    (0..trials as u64)
        .map(|i| {
            let clock = EventClock::new(substream_seed(seed, StreamTag::Oracle, i), rates, t);
            clock.fold(0, |g, a| if a.kind == EventKind::Active { 0 } else { g + 1 })
        })
        .collect()
}
