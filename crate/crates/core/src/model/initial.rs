use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded initial log-volume profile, evaluable at any real `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// `base + height · exp(-(x-center)²/2w²)`
    Gaussian { base: f64, height: f64, center: f64, width: f64 },
    /// Linear interpolation through the table, constant beyond its ends.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Gaussian { base, height, center, width } => {
                base.is_finite() && height.is_finite() && center.is_finite() && *width > 0.0
            }
            Profile::Table { xs, ys } => {
                !xs.is_empty()
                    && xs.len() == ys.len()
                    && xs.iter().chain(ys).all(|v| v.is_finite())
                    && xs.windows(2).all(|w| w[0] < w[1])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("malformed initial profile {self:?}")))
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Gaussian { base, height, center, width } => {
                base + height * (-0.5 * ((x - center) / width).powi(2)).exp()
            }
            Profile::Table { xs, ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                let last = xs.len() - 1;
                if x >= xs[last] {
                    return ys[last];
                }
                let i = xs.partition_point(|&k| k <= x) - 1;
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + w * (ys[i + 1] - ys[i])
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Profile::Constant { value } => value.abs(),
            Profile::Gaussian { base, height, .. } => base.abs().max((base + height).abs()),
            Profile::Table { ys, .. } => ys.iter().map(|y| y.abs()).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub bid: f64,
    pub ask: f64,
    pub v_bid: Profile,
    pub v_ask: Profile,
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        if !self.bid.is_finite() || !self.ask.is_finite() || self.bid > self.ask {
            return Err(Error::InvalidModel(format!(
                "initial prices need bid <= ask, got ({}, {})",
                self.bid, self.ask
            )));
        }
        self.v_bid.validate()?;
        self.v_ask.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_extends() {
        let p = Profile::Table { xs: vec![0.0, 1.0], ys: vec![1.0, 3.0] };
        assert_eq!(p.eval(-1.0), 1.0);
        assert_eq!(p.eval(0.5), 2.0);
        assert_eq!(p.eval(7.0), 3.0);
        assert_eq!(p.sup_norm(), 3.0);
    }

    #[test]
    fn crossed_initial_prices_rejected() {
        let ic = InitialCondition {
            bid: 1.0,
            ask: 0.5,
            v_bid: Profile::Constant { value: 0.0 },
            v_ask: Profile::Constant { value: 0.0 },
        };
        assert!(ic.validate().is_err());
    }
}
