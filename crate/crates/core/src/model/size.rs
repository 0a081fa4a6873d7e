use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of an order-size mark `ω^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SizeDist {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
    Beta { alpha: f64, beta: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl SizeDist {
    pub fn zero() -> Self {
        SizeDist::Constant { value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SizeDist::Constant { value } => value.is_finite() && value >= 0.0,
            SizeDist::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi,
            SizeDist::Exponential { mean } => mean.is_finite() && mean > 0.0,
            SizeDist::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite(),
            SizeDist::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("malformed size distribution {self:?}")))
        }
    }

    /// Closed support interval (upper end may be infinite).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            SizeDist::Constant { value } => (value, value),
            SizeDist::Uniform { lo, hi } => (lo, hi),
            SizeDist::Beta { .. } => (0.0, 1.0),
            SizeDist::Exponential { .. } | SizeDist::Gamma { .. } => (0.0, f64::INFINITY),
        }
    }

    /// Raw moment `E[ω^k]`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        let kf = f64::from(k);
        match *self {
            SizeDist::Constant { value } => value.powi(k as i32),
            SizeDist::Uniform { lo, hi } => {
                if hi == lo {
                    lo.powi(k as i32)
                } else {
                    (hi.powf(kf + 1.0) - lo.powf(kf + 1.0)) / ((kf + 1.0) * (hi - lo))
                }
            }
            SizeDist::Exponential { mean } => (1..=k).map(f64::from).product::<f64>() * mean.powi(k as i32),
            SizeDist::Beta { alpha, beta } => (0..k)
                .map(|i| (alpha + f64::from(i)) / (alpha + beta + f64::from(i)))
                .product(),
            SizeDist::Gamma { shape, scale } => {
                (0..k).map(|i| shape + f64::from(i)).product::<f64>() * scale.powi(k as i32)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    pub fn second_moment(&self) -> f64 {
        self.raw_moment(2)
    }

    pub fn fourth_moment(&self) -> f64 {
        self.raw_moment(4)
    }

    pub fn sampler(&self) -> SizeSampler {
        match *self {
            SizeDist::Constant { value } => SizeSampler::Constant(value),
            SizeDist::Uniform { lo, hi } => SizeSampler::Uniform(lo, hi),
            SizeDist::Exponential { mean } => SizeSampler::Exp(Exp::new(mean.recip()).expect("validated")),
            SizeDist::Beta { alpha, beta } => SizeSampler::Beta(Beta::new(alpha, beta).expect("validated")),
            SizeDist::Gamma { shape, scale } => SizeSampler::Gamma(Gamma::new(shape, scale).expect("validated")),
        }
    }
}

/// Prepared sampler; construction cost is paid once per path, not per event.
#[derive(Debug, Clone)]
pub enum SizeSampler {
    Constant(f64),
    Uniform(f64, f64),
    Exp(Exp<f64>),
    Beta(Beta<f64>),
    Gamma(Gamma<f64>),
}

impl SizeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SizeSampler::Constant(v) => *v,
            SizeSampler::Uniform(lo, hi) => lo + rng.random::<f64>() * (hi - lo),
            SizeSampler::Exp(d) => d.sample(rng),
            SizeSampler::Beta(d) => d.sample(rng),
            SizeSampler::Gamma(d) => d.sample(rng),
        }
    }
}
