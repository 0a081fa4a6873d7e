//! Location densities `f^T` for the relative price level of passive events.
//!
//! Densities are validated and normalised on construction; the raw
//! [`DensitySpec`] is what appears in configuration files.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform { lo: f64, hi: f64 },
    Triangular { lo: f64, mode: f64, hi: f64 },
    TruncatedGaussian { mean: f64, sd: f64, lo: f64, hi: f64 },
    /// Piecewise-linear density through `(xs[i], ys[i])`; rescaled to unit mass.
    PiecewiseLinear { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Triangular {
        lo: f64,
        mode: f64,
        hi: f64,
    },
    TruncatedGaussian {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
        cdf_lo: f64,
        mass: f64,
    },
    PiecewiseLinear {
        xs: Vec<f64>,
        ys: Vec<f64>,
        /// cumulative mass at each knot
        cum: Vec<f64>,
    },
}

/// A validated probability density with compact support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensitySpec", into = "DensitySpec")]
pub struct EventDensity {
    spec: DensitySpec,
    shape: Shape,
}

impl From<EventDensity> for DensitySpec {
    fn from(d: EventDensity) -> Self {
        d.spec
    }
}

impl TryFrom<DensitySpec> for EventDensity {
    type Error = Error;

    fn try_from(spec: DensitySpec) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let shape = match &spec {
            &DensitySpec::Uniform { lo, hi } => {
                if !finite(&[lo, hi]) || lo >= hi {
                    return bad(format!("uniform density needs lo < hi, got [{lo}, {hi}]"));
                }
                Shape::Uniform { lo, hi }
            }
            &DensitySpec::Triangular { lo, mode, hi } => {
                if !finite(&[lo, mode, hi]) || lo >= hi || mode < lo || mode > hi {
                    return bad(format!("triangular density needs lo <= mode <= hi, lo < hi; got ({lo}, {mode}, {hi})"));
                }
                Shape::Triangular { lo, mode, hi }
            }
            &DensitySpec::TruncatedGaussian { mean, sd, lo, hi } => {
                if !finite(&[mean, sd, lo, hi]) || sd <= 0.0 || lo >= hi {
                    return bad(format!(
                        "truncated gaussian needs sd > 0 and lo < hi; got sd={sd}, [{lo}, {hi}]"
                    ));
                }
                let std = Normal::standard();
                let cdf_lo = std.cdf((lo - mean) / sd);
                let mass = std.cdf((hi - mean) / sd) - cdf_lo;
                if mass < 1e-12 {
                    return bad("truncated gaussian carries no mass on its support".into());
                }
                Shape::TruncatedGaussian { mean, sd, lo, hi, cdf_lo, mass }
            }
            DensitySpec::PiecewiseLinear { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return bad("piecewise-linear density needs at least two knots and equal-length xs/ys".into());
                }
                if !finite(xs) || !finite(ys) || xs.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("piecewise-linear knots must be finite and strictly increasing".into());
                }
                if ys.iter().any(|&y| y < 0.0) {
                    return bad("piecewise-linear density values must be non-negative".into());
                }
                let mut cum = Vec::with_capacity(xs.len());
                cum.push(0.0);
                for i in 1..xs.len() {
                    let area = 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
                    cum.push(cum[i - 1] + area);
                }
                let total = *cum.last().unwrap();
                if total <= 0.0 {
                    return bad("piecewise-linear density has zero mass".into());
                }
                Shape::PiecewiseLinear {
                    xs: xs.clone(),
                    ys: ys.iter().map(|y| y / total).collect(),
                    cum: cum.iter().map(|c| c / total).collect(),
                }
            }
        };
        Ok(Self { spec, shape })
    }
}

impl EventDensity {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        DensitySpec::Uniform { lo, hi }.try_into()
    }

    pub fn triangular(lo: f64, mode: f64, hi: f64) -> Result<Self> {
        DensitySpec::Triangular { lo, mode, hi }.try_into()
    }

    pub fn truncated_gaussian(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        DensitySpec::TruncatedGaussian { mean, sd, lo, hi }.try_into()
    }

    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        DensitySpec::PiecewiseLinear { xs, ys }.try_into()
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Uniform { lo, hi }
            | Shape::Triangular { lo, hi, .. }
            | Shape::TruncatedGaussian { lo, hi, .. } => (*lo, *hi),
            Shape::PiecewiseLinear { xs, .. } => (xs[0], xs[xs.len() - 1]),
        }
    }

    /// Checks that the support lies in `[-m, m]`.
    pub fn check_bound(&self, m: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if lo < -m || hi > m {
            return Err(Error::InvalidModel(format!(
                "density support [{lo}, {hi}] is not contained in [-{m}, {m}]"
            )));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &self.shape {
            &Shape::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    (hi - lo).recip()
                } else {
                    0.0
                }
            }
            &Shape::Triangular { lo, mode, hi } => {
                if x < lo || x > hi {
                    0.0
                } else if x < mode {
                    2.0 * (x - lo) / ((hi - lo) * (mode - lo))
                } else if x > mode {
                    2.0 * (hi - x) / ((hi - lo) * (hi - mode))
                } else {
                    2.0 / (hi - lo)
                }
            }
            &Shape::TruncatedGaussian { mean, sd, lo, hi, mass, .. } => {
                if x < lo || x > hi {
                    0.0
                } else {
                    let z = (x - mean) / sd;
                    (-0.5 * z * z).exp() / (sd * mass * (2.0 * std::f64::consts::PI).sqrt())
                }
            }
            Shape::PiecewiseLinear { xs, ys, .. } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = segment(xs, x);
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + w * (ys[i + 1] - ys[i])
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match &self.shape {
            &Shape::Uniform { lo, hi } => (x - lo) / (hi - lo),
            &Shape::Triangular { lo, mode, hi } => {
                if x <= mode {
                    (x - lo).powi(2) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - x).powi(2) / ((hi - lo) * (hi - mode))
                }
            }
            &Shape::TruncatedGaussian { mean, sd, cdf_lo, mass, .. } => {
                (Normal::standard().cdf((x - mean) / sd) - cdf_lo) / mass
            }
            Shape::PiecewiseLinear { xs, ys, cum } => {
                let i = segment(xs, x);
                let s = x - xs[i];
                let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                cum[i] + ys[i] * s + 0.5 * slope * s * s
            }
        }
    }

    /// Maximum of the density.
    pub fn sup(&self) -> f64 {
        match &self.shape {
            &Shape::Uniform { lo, hi } => (hi - lo).recip(),
            &Shape::Triangular { lo, hi, .. } => 2.0 / (hi - lo),
            &Shape::TruncatedGaussian { mean, lo, hi, .. } => self.pdf(mean.clamp(lo, hi)),
            Shape::PiecewiseLinear { ys, .. } => ys.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Lipschitz constant of the density restricted to its support.
    pub fn lipschitz(&self) -> f64 {
        match &self.shape {
            Shape::Uniform { .. } => 0.0,
            &Shape::Triangular { lo, mode, hi } => {
                let left = if mode > lo { 2.0 / ((hi - lo) * (mode - lo)) } else { 0.0 };
                let right = if hi > mode { 2.0 / ((hi - lo) * (hi - mode)) } else { 0.0 };
                left.max(right)
            }
            &Shape::TruncatedGaussian { sd, mass, .. } => {
                // |d/dx| of the gaussian density peaks at one sd from the mean
                (-0.5f64).exp() / (sd * sd * mass * (2.0 * std::f64::consts::PI).sqrt())
            }
            Shape::PiecewiseLinear { xs, ys, .. } => xs
                .windows(2)
                .zip(ys.windows(2))
                .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.shape {
            Shape::Uniform { lo, hi } => lo + rng.random::<f64>() * (hi - lo),
            Shape::TruncatedGaussian { mean, sd, lo, hi, cdf_lo, mass } => {
                if mass > 0.25 {
                    loop {
                        let z: f64 = rng.sample(StandardNormal);
                        let x = mean + sd * z;
                        if (lo..=hi).contains(&x) {
                            return x;
                        }
                    }
                }
                let p = cdf_lo + rng.random::<f64>() * mass;
                (mean + sd * Normal::standard().inverse_cdf(p)).clamp(lo, hi)
            }
            _ => self.quantile(rng.random::<f64>()),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.shape {
            &Shape::Uniform { lo, hi } => lo + u * (hi - lo),
            &Shape::Triangular { lo, mode, hi } => {
                let split = (mode - lo) / (hi - lo);
                if u < split {
                    lo + (u * (hi - lo) * (mode - lo)).sqrt()
                } else {
                    hi - ((1.0 - u) * (hi - lo) * (hi - mode)).sqrt()
                }
            }
            &Shape::TruncatedGaussian { mean, sd, lo, hi, cdf_lo, mass } => {
                (mean + sd * Normal::standard().inverse_cdf(cdf_lo + u * mass)).clamp(lo, hi)
            }
            Shape::PiecewiseLinear { xs, ys, cum } => {
                let i = cum.partition_point(|&c| c <= u).clamp(1, xs.len() - 1) - 1;
                let width = xs[i + 1] - xs[i];
                let slope = (ys[i + 1] - ys[i]) / width;
                let target = u - cum[i];
                // solve ys[i]·s + slope/2·s² = target for s in [0, width]
                let s = if slope.abs() < 1e-14 {
                    if ys[i] > 0.0 { target / ys[i] } else { 0.0 }
                } else {
                    let disc = (ys[i] * ys[i] + 2.0 * slope * target).max(0.0);
                    2.0 * target / (ys[i] + disc.sqrt()).max(f64::MIN_POSITIVE)
                };
                (xs[i] + s.clamp(0.0, width)).min(xs[xs.len() - 1])
            }
        }
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    xs.partition_point(|&k| k <= x).clamp(1, xs.len() - 1) - 1
}
