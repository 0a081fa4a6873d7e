//! Direct integration of the relative-volume equation
//!
//! ```text
//! dU = [p f^P - c f^C U + b DU + ½|σ_P|² D²U] dt + √2 e f^N dW + DU σ_P·dW̃
//! ```
//!
//! on a grid of relative positions, with central differences. Only used to
//! cross-check the shifted output of the main solver, so it is restricted to
//! smooth (truncated-Gaussian) location densities.

use super::{quadrature, Increments, LimitGrid, LimitModel, SideCoefficients};
use crate::error::{Error, Result};
use crate::model::{DensitySpec, InitialCondition, PriceInputs, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct SpdeState {
    pub t: f64,
    pub bid: f64,
    pub ask: f64,
    pub u_bid: Vec<f64>,
    pub u_ask: Vec<f64>,
}

impl SpdeState {
    pub fn relative(&self, side: Side) -> &[f64] {
        match side {
            Side::Bid => &self.u_bid,
            Side::Ask => &self.u_ask,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpdeOracle {
    model: LimitModel,
    grid: LimitGrid,
}

fn smooth(side: &SideCoefficients) -> bool {
    [&side.f_place, &side.f_cancel, &side.f_noise]
        .iter()
        .all(|f| matches!(f.spec(), DensitySpec::TruncatedGaussian { .. }))
}

impl SpdeOracle {
    /// `grid` holds relative positions and should extend past the flow support.
    pub fn new(model: &LimitModel, grid: LimitGrid) -> Result<Self> {
        if !smooth(&model.bid) || !smooth(&model.ask) {
            return Err(Error::InvalidModel(
                "the relative-volume oracle needs truncated-Gaussian location densities".into(),
            ));
        }
        Ok(Self { model: model.clone(), grid })
    }

    pub fn grid(&self) -> &LimitGrid {
        &self.grid
    }

    pub fn initial(&self, ic: &InitialCondition) -> SpdeState {
        SpdeState {
            t: 0.0,
            bid: ic.bid,
            ask: ic.ask,
            u_bid: self.grid.nodes().map(|r| ic.v_bid.eval(r + ic.bid)).collect(),
            u_ask: self.grid.nodes().map(|r| ic.v_ask.eval(r + ic.ask)).collect(),
        }
    }

    fn y(&self, u: &[f64], side: Side) -> f64 {
        quadrature(&self.grid, u, &self.model.side(side).kernel, 0.0)
    }

    pub fn step(&self, s: &mut SpdeState, dt: f64, inc: &Increments) {
        let inputs = PriceInputs {
            bid: s.bid,
            ask: s.ask,
            y_bid: self.y(&s.u_bid, Side::Bid),
            y_ask: self.y(&s.u_ask, Side::Ask),
        };
        let (b_bid, b_ask) = self.model.price.preset.drift(&inputs);
        let sigma = self.model.price.preset.diffusion(&inputs);
        let [w0, w1] = inc.w_price;
        let g = &self.grid;
        let advance = |u: &mut Vec<f64>, side: &SideCoefficients, b: f64, row: [f64; 2], dw: f64| {
            let var = row[0] * row[0] + row[1] * row[1];
            let transport = row[0] * w0 + row[1] * w1;
            let old = u.clone();
            for i in 1..g.len - 1 {
                let r = g.x(i);
                let du = (old[i + 1] - old[i - 1]) / (2.0 * g.h);
                let d2u = (old[i + 1] - 2.0 * old[i] + old[i - 1]) / (g.h * g.h);
                let (p, c, e) = side.coefficients(r);
                u[i] += (p - c * old[i] + b * du + 0.5 * var * d2u) * dt + e * dw + du * transport;
            }
            u[0] = u[1];
            let n = g.len;
            u[n - 1] = u[n - 2];
        };
        advance(&mut s.u_bid, &self.model.bid, b_bid, sigma.bid, inc.w_bid);
        advance(&mut s.u_ask, &self.model.ask, b_ask, sigma.ask, inc.w_ask);
        s.bid += b_bid * dt + sigma.bid[0] * w0 + sigma.bid[1] * w1;
        s.ask += b_ask * dt + sigma.ask[0] * w0 + sigma.ask[1] * w1;
        s.t += dt;
    }

    /// State after `increments.len()` steps.
    pub fn solve(&self, ic: &InitialCondition, dt: f64, increments: &[Increments]) -> SpdeState {
        let mut s = self.initial(ic);
        for inc in increments {
            self.step(&mut s, dt, inc);
        }
        s
    }
}
