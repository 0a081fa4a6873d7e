use super::stream::{ActiveMarks, PassiveMarks};
use crate::error::{Error, Result};
use crate::model::{
    price_move_pmf, BookState, Coupling, JointPmf, Kernel, PriceInputs, PriceMoveSpec, ScalingParams, Side,
};

/// `Σ_j v_j φ(x_j - P) Δx` for the given side at its current best price.
pub fn volume_statistic(state: &BookState, kernel: &Kernel, side: Side, params: &ScalingParams) -> f64 {
    state.density(side).pairing(kernel, params.price_of(state.price(side)))
}

pub fn price_inputs(state: &BookState, spec: &PriceMoveSpec, params: &ScalingParams) -> PriceInputs {
    PriceInputs {
        bid: params.price_of(state.bid),
        ask: params.price_of(state.ask),
        y_bid: volume_statistic(state, &spec.kernel_bid, Side::Bid, params),
        y_ask: volume_statistic(state, &spec.kernel_ask, Side::Ask, params),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveEffect {
    pub xi_bid: i8,
    pub xi_ask: i8,
    /// Number of sides whose requested moments were not met.
    pub violations: u32,
}

/// Moves each price by at most one tick and refreshes the held noise signs.
pub fn apply_active(
    state: &mut BookState,
    time: f64,
    marks: &ActiveMarks,
    spec: &PriceMoveSpec,
    params: &ScalingParams,
    guard_ticks: i64,
) -> Result<ActiveEffect> {
    let inputs = price_inputs(state, spec, params);
    let (b_bid, b_ask) = spec.preset.drift(&inputs);
    let sigma = spec.preset.diffusion(&inputs);
    let guarded = state.ask - state.bid <= guard_ticks;
    let bid = price_move_pmf(b_bid, sigma.var_bid(), Side::Bid, guarded, params, spec.clamp)?;
    let ask = price_move_pmf(b_ask, sigma.var_ask(), Side::Ask, guarded, params, spec.clamp)?;
    let mut violations = u32::from(bid.clamped) + u32::from(ask.clamped);
    let (xi_bid, xi_ask) = match spec.coupling {
        Coupling::Independent => (bid.pmf.draw(marks.u_bid), ask.pmf.draw(marks.u_ask)),
        Coupling::CommonFactor => {
            let (joint, clamped) = JointPmf::common_factor(&bid.pmf, &ask.pmf, sigma.cov(), spec.clamp)?;
            violations += u32::from(clamped);
            joint.draw(marks.u_joint)
        }
    };
    let new_bid = state.bid + i64::from(xi_bid);
    let new_ask = state.ask + i64::from(xi_ask);
    if new_bid > new_ask {
        return Err(Error::CrossedBook { time, bid: new_bid, ask: new_ask });
    }
    state.bid = new_bid;
    state.ask = new_ask;
    state.anchor_bid = new_bid;
    state.anchor_ask = new_ask;
    state.noise_sign_bid = marks.sign_bid;
    state.noise_sign_ask = marks.sign_ask;
    state.t = time;
    Ok(ActiveEffect { xi_bid, xi_ask, violations })
}

/// The three cell updates of one passive event. `h1`, `h3` are additive
/// increments, `h2` the proportion of the cancellation cell removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveEffect {
    pub side: Side,
    pub place_cell: i64,
    pub h1: f64,
    pub cancel_cell: i64,
    pub h2: f64,
    pub noise_cell: i64,
    pub h3: f64,
}

impl PassiveEffect {
    pub fn compute(state: &BookState, side: Side, marks: &PassiveMarks, params: &ScalingParams) -> Self {
        let anchor = state.anchor(side);
        let cell = |level: f64| anchor + (level / params.delta_x).floor() as i64;
        let impact = params.cell_impact();
        PassiveEffect {
            side,
            place_cell: cell(marks.place_level),
            h1: marks.place_size * impact,
            cancel_cell: cell(marks.cancel_level),
            h2: marks.cancel_size * impact,
            noise_cell: cell(marks.noise_level),
            h3: marks.noise_size * f64::from(state.noise_sign(side)) * params.noise_impact(),
        }
    }
}

/// Placement, cancellation and noise, all evaluated on the pre-event book.
pub fn apply_passive(
    state: &mut BookState,
    time: f64,
    side: Side,
    marks: &PassiveMarks,
    params: &ScalingParams,
) -> PassiveEffect {
    let e = PassiveEffect::compute(state, side, marks, params);
    let v = state.density_mut(side);
    let cancelled = e.h2 * v.get(e.cancel_cell);
    if cancelled != 0.0 {
        *v.get_mut(e.cancel_cell) -= cancelled;
    }
    if e.h1 != 0.0 {
        *v.get_mut(e.place_cell) += e.h1;
    }
    if e.h3 != 0.0 {
        *v.get_mut(e.noise_cell) += e.h3;
    }
    state.t = time;
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialCondition, PricePreset, Profile};

    fn book(n: u32, v: f64) -> (BookState, ScalingParams) {
        let p = ScalingParams::try_new(n).unwrap();
        let ic = InitialCondition {
            bid: 10.0,
            ask: 10.5,
            v_bid: Profile::Constant { value: v },
            v_ask: Profile::Constant { value: v },
        };
        (BookState::from_initial(&ic, &p), p)
    }

    fn marks(c: f64, p: f64, nz: f64, lc: f64, lp: f64, ln: f64) -> PassiveMarks {
        PassiveMarks {
            cancel_size: c,
            place_size: p,
            noise_size: nz,
            cancel_level: lc,
            place_level: lp,
            noise_level: ln,
        }
    }

    #[test]
    fn zero_sizes_leave_book_unchanged() {
        let (mut s, p) = book(100, 2.0);
        apply_passive(&mut s, 0.1, Side::Bid, &marks(0.0, 0.0, 0.0, 0.05, -0.2, 0.3), &p);
        assert_eq!(s.v_bid.touched_count(), 0);
        assert_eq!(s.v_bid.get(s.bid), 2.0);
    }

    #[test]
    fn cancellation_removes_proportion_of_cell() {
        // Δv/Δx = 1e-3 at n = 100
        let (mut s, p) = book(100, 2.0);
        let e = apply_passive(&mut s, 0.1, Side::Ask, &marks(0.5, 0.0, 0.0, 0.03, 0.0, 0.0), &p);
        assert_eq!(e.cancel_cell, s.ask);
        assert!((s.v_ask.get(s.ask) - 1.999).abs() < 1e-15);
    }

    #[test]
    fn placement_and_shadow_book_levels() {
        let (mut s, p) = book(100, 0.0);
        let e = apply_passive(&mut s, 0.1, Side::Bid, &marks(0.0, 1.0, 0.0, 0.0, -0.25, 0.0), &p);
        assert_eq!(e.place_cell, s.bid - 3);
        assert!((s.v_bid.get(s.bid - 3) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn single_event_cancelled_volume() {
        // with π^C = π^N, ω^P = 0, ω^N = 1 the volume removed at the level is
        // ω^C Δv v(t-) + ξ̃ √Δv Δx (ξ̃ = -1 here)
        let (mut s, p) = book(64, 1.5);
        s.noise_sign_bid = -1;
        let cell = s.bid + 2;
        let before = s.v_bid.get(cell);
        apply_passive(&mut s, 0.1, Side::Bid, &marks(0.4, 0.0, 1.0, 0.3, 0.0, 0.3), &p);
        let removed = (before - s.v_bid.get(cell)) * p.delta_x;
        let expected = 0.4 * p.delta_v * before + p.delta_v.sqrt() * p.delta_x;
        assert!((removed - expected).abs() < 1e-15);
    }

    #[test]
    fn active_moves_are_single_ticks_and_respect_guard() {
        let (mut s, p) = book(100, 0.0);
        let spec = PriceMoveSpec::new(PricePreset::Constant {
            drift_bid: 0.0,
            drift_ask: 0.0,
            sigma: crate::model::Diffusion { bid: [0.7, 0.0], ask: [0.0, 0.7] },
        });
        s.ask = s.bid + 1;
        let up = ActiveMarks { u_bid: 0.999, u_ask: 0.0, u_joint: 0.0, sign_bid: -1, sign_ask: 1 };
        let before = s.bid;
        let e = apply_active(&mut s, 0.5, &up, &spec, &p, 2).unwrap();
        assert!(e.xi_bid != 1 && e.xi_ask != -1);
        assert!(e.violations == 2);
        assert!((s.bid - before).abs() <= 1);
        assert_eq!(s.noise_sign_bid, -1);
        assert_eq!(s.anchor_bid, s.bid);
    }
}
