use loblab_core::limit::{
    brownian_increments, coarsen, pairing, relative_volume, solve_limit, solve_with_increments, LimitGrid,
    LimitModel, LimitState, SpdeOracle,
};
use loblab_core::model::{
    Diffusion, EventDensity, Kernel, ModelSpec, PriceMoveSpec, PricePreset, Profile, Side, SizeDist,
};
use loblab_core::{scenarios, Error};

fn grid() -> LimitGrid {
    LimitGrid::new(-5.0, 4.5, 0.01).unwrap()
}

fn noise_free(mut m: ModelSpec) -> ModelSpec {
    for s in [&mut m.flow.bid, &mut m.flow.ask] {
        s.noise.size = SizeDist::zero();
    }
    m
}

#[test]
fn trivial_model_is_stationary() {
    let mut m = scenarios::frozen_model();
    for s in [&mut m.flow.bid, &mut m.flow.ask] {
        s.noise.size = SizeDist::zero();
        s.place.size = SizeDist::zero();
        s.cancel.size = SizeDist::zero();
    }
    let lm = LimitModel::from_spec(&m).unwrap();
    let out = solve_limit(&lm, &m.initial, &grid(), 1.0 / 256.0, 1.0, 3, &[0.0, 1.0]).unwrap();
    assert_eq!(out[0].v_bid, out[1].v_bid);
    assert_eq!(out[0].ask, out[1].ask);
}

#[test]
fn frozen_noise_free_matches_exponential_relaxation() {
    let m = noise_free(scenarios::frozen_model());
    let lm = LimitModel::from_spec(&m).unwrap();
    let g = grid();
    let dt = 1.0 / 2048.0;
    let out = solve_limit(&lm, &m.initial, &g, dt, 1.0, 1, &[1.0]).unwrap();
    let mut worst: f64 = 0.0;
    for side in Side::BOTH {
        let f = m.flow.side(side);
        let price = out[0].price(side);
        for (i, x) in g.nodes().enumerate() {
            let p = f.place.size.mean() * f.place.location.pdf(x - price);
            let c = f.cancel.size.mean() * f.cancel.location.pdf(x - price);
            let v0 = m.initial.v_bid.eval(x) * (side == Side::Bid) as u8 as f64
                + m.initial.v_ask.eval(x) * (side == Side::Ask) as u8 as f64;
            let exact = if c > 0.0 { v0 * (-c).exp() + p / c * (1.0 - (-c).exp()) } else { v0 + p };
            worst = worst.max((out[0].volume(side)[i] - exact).abs());
        }
    }
    assert!(worst <= 5.0 * dt, "sup error {worst}");
}

#[test]
fn symmetric_drivers_keep_spread_constant() {
    let mut m = scenarios::frozen_model();
    m.price = PriceMoveSpec::new(PricePreset::Constant {
        drift_bid: 0.1,
        drift_ask: 0.1,
        sigma: Diffusion { bid: [0.3, 0.1], ask: [0.3, 0.1] },
    });
    m.price.coupling = loblab_core::model::Coupling::CommonFactor;
    let lm = LimitModel::from_spec(&m).unwrap();
    let out = solve_limit(&lm, &m.initial, &grid(), 1.0 / 512.0, 1.0, 4, &[0.5, 1.0]).unwrap();
    let spread0 = m.initial.ask - m.initial.bid;
    for s in &out {
        assert!((s.ask - s.bid - spread0).abs() < 1e-12);
    }
}

#[test]
fn linear_in_initial_volume_without_placements() {
    let mut m = scenarios::reference_model();
    m.price = PriceMoveSpec::new(PricePreset::Constant {
        drift_bid: 0.0,
        drift_ask: 0.0,
        sigma: Diffusion { bid: [0.3, 0.0], ask: [0.0, 0.3] },
    });
    for s in [&mut m.flow.bid, &mut m.flow.ask] {
        s.place.size = SizeDist::zero();
        s.noise.size = SizeDist::zero();
    }
    let lm = LimitModel::from_spec(&m).unwrap();
    let mut doubled = m.clone();
    doubled.initial.v_bid = Profile::Gaussian { base: 2.0, height: 1.0, center: scenarios::BID0, width: 0.5 };
    let a = solve_limit(&lm, &m.initial, &grid(), 1.0 / 512.0, 1.0, 9, &[1.0]).unwrap();
    let b = solve_limit(&lm, &doubled.initial, &grid(), 1.0 / 512.0, 1.0, 9, &[1.0]).unwrap();
    for (x, y) in a[0].v_bid.iter().zip(&b[0].v_bid) {
        assert_eq!(2.0 * x, *y);
    }
}

#[test]
fn quadrature_is_consistent_with_stored_volume() {
    let m = scenarios::reference_model();
    let lm = LimitModel::from_spec(&m).unwrap();
    let g = grid();
    let out = solve_limit(&lm, &m.initial, &g, 1.0 / 256.0, 1.0, 5, &[0.5, 1.0]).unwrap();
    for s in &out {
        let y = loblab_core::limit::quadrature(&g, &s.v_ask, &lm.ask.kernel, s.ask);
        assert_eq!(y, s.y_ask);
    }
}

#[test]
fn drivers_are_uncorrelated() {
    let n = 20_000;
    let inc = brownian_increments(12, 1.0, n);
    let cols: [Vec<f64>; 4] = [
        inc.iter().map(|i| i.w_price[0]).collect(),
        inc.iter().map(|i| i.w_price[1]).collect(),
        inc.iter().map(|i| i.w_bid).collect(),
        inc.iter().map(|i| i.w_ask).collect(),
    ];
    for a in 0..4 {
        for b in a + 1..4 {
            let c: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            assert!(c.abs() < 3.0 / (n as f64).sqrt(), "{a},{b}: {c}");
        }
    }
}

fn sup_diff(a: &LimitState, b: &LimitState) -> f64 {
    a.v_bid
        .iter()
        .zip(&b.v_bid)
        .chain(a.v_ask.iter().zip(&b.v_ask))
        .map(|(x, y)| (x - y).abs())
        .fold((a.bid - b.bid).abs().max((a.ask - b.ask).abs()), f64::max)
}

#[test]
fn dyadic_refinement_order_with_additive_noise() {
    // frozen prices: the noise is additive and Euler-Maruyama has strong order one
    let m = scenarios::frozen_model();
    let lm = LimitModel::from_spec(&m).unwrap();
    let g = grid();
    let finest = brownian_increments(21, 1.0 / 1024.0, 1024);
    let mut levels = vec![finest];
    for _ in 0..3 {
        let c = coarsen(levels.last().unwrap());
        levels.push(c);
    }
    let ends: Vec<LimitState> = levels
        .iter()
        .map(|inc| {
            let dt = 1.0 / inc.len() as f64;
            solve_with_increments(&lm, &m.initial, &g, dt, inc, &[1.0]).unwrap().pop().unwrap()
        })
        .collect();
    let errs: Vec<f64> = ends.windows(2).map(|w| sup_diff(&w[0], &w[1])).collect();
    for w in errs.windows(2) {
        let order = (w[1] / w[0]).log2();
        assert!(order >= 0.8, "errors {errs:?}");
    }
}

#[test]
fn mean_volume_solves_noise_free_equation() {
    let m = scenarios::frozen_model();
    let lm = LimitModel::from_spec(&m).unwrap();
    let lm0 = LimitModel::from_spec(&noise_free(m.clone())).unwrap();
    let g = LimitGrid::new(-3.5, 3.0, 0.05).unwrap();
    let dt = 1.0 / 256.0;
    let ode = &solve_limit(&lm0, &m.initial, &g, dt, 1.0, 0, &[1.0]).unwrap()[0];
    let reps = 1000;
    let node = g.range(scenarios::ASK0 + 0.1, scenarios::ASK0 + 0.2).start;
    let xs: Vec<f64> =
        (0..reps).map(|s| solve_limit(&lm, &m.initial, &g, dt, 1.0, 1000 + s, &[1.0]).unwrap()[0].v_ask[node]).collect();
    let mean = xs.iter().sum::<f64>() / reps as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    assert!((mean - ode.v_ask[node]).abs() < 3.0 * (var / reps as f64).sqrt());
}

#[test]
fn frozen_price_pairing_variance() {
    // with frozen prices ⟨v(t), φ⟩ has variance 2t (e ∫ f^N(x - A) φ(x) dx)²
    let m = scenarios::noise_only_model();
    let lm = LimitModel::from_spec(&m).unwrap();
    let g = LimitGrid::new(-3.5, 3.0, 0.02).unwrap();
    let phi = Kernel::GaussianBump { center: scenarios::ASK0 + 0.1, width: 0.3, radius: 0.6, amplitude: 1.0 };
    let f = &m.flow.ask.noise;
    let e = f.size.mean();
    let cross: f64 = g.nodes().map(|x| f.location.pdf(x - scenarios::ASK0) * phi.eval(x)).sum::<f64>() * g.h;
    let t = 1.0;
    let expected = 2.0 * t * (e * cross).powi(2);
    let reps = 2000;
    let xs: Vec<f64> = (0..reps)
        .map(|s| {
            let st = &solve_limit(&lm, &m.initial, &g, 1.0 / 64.0, 1.0, 50 + s, &[1.0]).unwrap()[0];
            pairing(&g, &st.v_ask, &phi)
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / reps as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = expected * (2.0 / (reps - 1) as f64).sqrt();
    assert!((var - expected).abs() < 3.0 * se, "var {var} vs {expected}");
}

#[test]
fn relative_volume_shift_and_constant() {
    let m = scenarios::reference_model();
    let lm = LimitModel::from_spec(&m).unwrap();
    let g = grid();
    let mut s = LimitState::initial(&m.initial, &g, &lm);
    s.ask = 0.0;
    let rel: Vec<f64> = (0..50).map(|i| -1.0 + i as f64 * 0.04).collect();
    let u = relative_volume(&s, &g, Side::Ask, &rel).unwrap();
    for (r, uu) in rel.iter().zip(&u) {
        assert!((g.interpolate(&s.v_ask, *r).unwrap() - uu).abs() < 1e-15);
    }
    s.v_bid = vec![3.0; g.len];
    s.bid = 0.731;
    assert!(relative_volume(&s, &g, Side::Bid, &rel).unwrap().iter().all(|&x| (x - 3.0).abs() < 1e-15));
    s.bid = 4.4;
    assert!(matches!(relative_volume(&s, &g, Side::Bid, &rel), Err(Error::GridBreach { .. })));
}

#[test]
fn grid_breach_is_reported() {
    let m = scenarios::reference_model();
    let lm = LimitModel::from_spec(&m).unwrap();
    let small = LimitGrid::new(-2.0, 2.0, 0.01).unwrap();
    let r = solve_limit(&lm, &m.initial, &small, 1.0 / 64.0, 1.0, 1, &[1.0]);
    assert!(matches!(r, Err(Error::GridBreach { .. })));
}

/// Sup-norm gap on `|r| <= 1` between the shifted main solution and the
/// directly integrated relative volume, both driven by the same increments.
fn relative_gap(steps: usize, h: f64) -> f64 {
    let m = scenarios::reference_model();
    let lm = LimitModel::from_spec(&m).unwrap();
    let rel_grid = LimitGrid::new(-2.0, 2.0, h).unwrap();
    let oracle = SpdeOracle::new(&lm, rel_grid).unwrap();
    let g = LimitGrid::new(-5.0, 4.5, 0.005).unwrap();
    let dt = 0.5 / steps as f64;
    let inc = brownian_increments(77, dt, steps);
    let main = solve_with_increments(&lm, &m.initial, &g, dt, &inc, &[0.5]).unwrap().pop().unwrap();
    let spde = oracle.solve(&m.initial, dt, &inc);
    let rel: Vec<f64> = rel_grid.nodes().filter(|r| r.abs() <= 1.0).collect();
    let idx: Vec<usize> = rel_grid.range(-1.0, 1.0).collect();
    Side::BOTH
        .iter()
        .map(|&side| {
            let u = relative_volume(&main, &g, side, &rel).unwrap();
            idx.iter().zip(&u).map(|(&i, x)| (spde.relative(side)[i] - x).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn shifted_solution_matches_relative_volume_equation() {
    // the volume noise coefficient moves with the price, so both schemes
    // converge at the Euler-Maruyama strong rate √dt
    let coarse = relative_gap(256, 0.02);
    let fine = relative_gap(4096, 0.01);
    assert!(coarse < 0.05, "coarse gap {coarse}");
    assert!(fine < 0.5 * coarse, "gap {coarse} -> {fine}");
}

#[test]
fn relative_volume_oracle_rejects_rough_densities() {
    let mut m = scenarios::reference_model();
    m.flow.bid.place.location = EventDensity::uniform(-1.0, 1.0).unwrap();
    let lm = LimitModel::from_spec(&m).unwrap();
    assert!(SpdeOracle::new(&lm, LimitGrid::new(-2.0, 2.0, 0.02).unwrap()).is_err());
}
