//! Model ingredients of the discrete book and its scaling limit.

mod book;
mod density;
mod initial;
mod kernel;
mod price;
mod scaling;
mod size;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use book::{BookState, StepDensity};
pub use density::{DensitySpec, EventDensity};
pub use initial::{InitialCondition, Profile};
pub use kernel::Kernel;
pub use price::{
    price_move_pmf, ClampPolicy, Coupling, Diffusion, JointPmf, MovePmf, Pmf3, PriceInputs, PriceMoveSpec,
    PricePreset,
};
pub use scaling::{derive_scaling, snap_to_grid, ScalingParams};
pub use size::{SizeDist, SizeSampler};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Bid, Side::Ask];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Bid => "bid",
            Side::Ask => "ask",
        })
    }
}

/// Size distribution and placement density of one passive event type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventTypeSpec {
    pub size: SizeDist,
    pub location: EventDensity,
}

impl EventTypeSpec {
    pub fn new(size: SizeDist, location: EventDensity) -> Self {
        Self { size, location }
    }
}

/// Cancellation, placement and noise of one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideFlow {
    pub cancel: EventTypeSpec,
    pub place: EventTypeSpec,
    pub noise: EventTypeSpec,
}

impl SideFlow {
    fn validate(&self, side: Side, bound: f64) -> Result<()> {
        for (name, ev) in [("cancel", &self.cancel), ("place", &self.place), ("noise", &self.noise)] {
            let at = |e: Error| Error::InvalidModel(format!("flow.{side}.{name}: {e}"));
            ev.size.validate().map_err(at)?;
            ev.location.check_bound(bound).map_err(at)?;
        }
        let (lo, hi) = self.cancel.size.support();
        if lo < 0.0 || hi > 1.0 {
            return Err(Error::InvalidModel(format!(
                "flow.{side}.cancel.size: cancellation proportions must lie in [0, 1], support is [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderFlowSpec {
    pub bid: SideFlow,
    pub ask: SideFlow,
    /// Every location density lives in `[-M, M]`.
    #[serde(default = "default_bound")]
    pub support_bound: f64,
}

fn default_bound() -> f64 {
    1.0
}

impl OrderFlowSpec {
    /// Same flow on both sides.
    pub fn symmetric(flow: SideFlow) -> Self {
        Self { bid: flow.clone(), ask: flow, support_bound: 1.0 }
    }

    pub fn side(&self, side: Side) -> &SideFlow {
        match side {
            Side::Bid => &self.bid,
            Side::Ask => &self.ask,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_bound.is_finite() && self.support_bound > 0.0) {
            return Err(Error::InvalidModel(format!(
                "flow.support_bound must be positive, got {}",
                self.support_bound
            )));
        }
        self.bid.validate(Side::Bid, self.support_bound)?;
        self.ask.validate(Side::Ask, self.support_bound)
    }
}

/// Everything that defines the model up to the scale index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub flow: OrderFlowSpec,
    pub price: PriceMoveSpec,
    pub initial: InitialCondition,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        self.price.validate()?;
        self.initial.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(cancel: SizeDist) -> SideFlow {
        let f = EventDensity::uniform(-0.5, 0.5).unwrap();
        SideFlow {
            cancel: EventTypeSpec::new(cancel, f.clone()),
            place: EventTypeSpec::new(SizeDist::Constant { value: 1.0 }, f.clone()),
            noise: EventTypeSpec::new(SizeDist::zero(), f),
        }
    }

    #[test]
    fn cancellation_support_outside_unit_interval_is_named() {
        let spec = OrderFlowSpec::symmetric(flow(SizeDist::Uniform { lo: 0.0, hi: 1.5 }));
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("flow.bid.cancel.size"), "{err}");
        assert!(OrderFlowSpec::symmetric(flow(SizeDist::Beta { alpha: 2.0, beta: 2.0 })).validate().is_ok());
    }

    #[test]
    fn density_outside_bound_is_rejected() {
        let mut spec = OrderFlowSpec::symmetric(flow(SizeDist::zero()));
        spec.support_bound = 0.4;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn side_display() {
        assert_eq!(Side::Bid.to_string(), "bid");
        assert_eq!(Side::Ask.to_string(), "ask");
    }
}
