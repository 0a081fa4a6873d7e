use loblab_core::auxiliary::{decompose, l2_distance_squared, simulate_with_aux, AuxConfig, TimeChange};
use loblab_core::engine::{simulate_path, Rates, RunOptions};
use loblab_core::model::{ScalingParams, Side, SizeDist};
use loblab_core::{scenarios, Error};

fn params(n: u32) -> ScalingParams {
    ScalingParams::try_new(n).unwrap()
}

#[test]
fn no_passive_events_means_zero_fields() {
    let model = scenarios::reference_model();
    let opts = RunOptions { rates: Some(Rates { active: 16.0, passive_bid: 0.0, passive_ask: 0.0 }), until_active: None };
    let (path, dec) = simulate_with_aux(params(16), &model, 1, 1.0, &[1.0], &opts, AuxConfig::default()).unwrap();
    let snap = dec.snapshot_at(1.0).unwrap();
    for side in Side::BOTH {
        for i in 1..=3 {
            assert_eq!(snap.fields(side).get(i).touched_count(), 0);
        }
        assert_eq!(path.snapshot_at(1.0).unwrap().density(side).touched_count(), 0);
    }
}

#[test]
fn single_placement_fills_one_cell() {
    let mut model = scenarios::frozen_model();
    for side in [&mut model.flow.bid, &mut model.flow.ask] {
        side.cancel.size = SizeDist::zero();
        side.place.size = SizeDist::Constant { value: 1.0 };
        side.noise.size = SizeDist::zero();
    }
    let rates = Rates { active: 0.0, passive_bid: 1.0, passive_ask: 0.0 };
    let opts = RunOptions { rates: Some(rates), until_active: None };
    let (path, dec) = (0..)
        .map(|seed| simulate_with_aux(params(100), &model, seed, 1.0, &[1.0], &opts, AuxConfig::default()).unwrap())
        .find(|(p, _)| p.counts.passive_bid == 1)
        .unwrap();
    let f = dec.snapshot_at(1.0).unwrap().fields(Side::Bid);
    let cells: Vec<(i64, f64)> = f.v1.touched().collect();
    assert_eq!(cells.len(), 1);
    assert!((cells[0].1 - 1e-3).abs() < 1e-18);
    assert_eq!(f.v2.touched_count() + f.v3.touched_count(), 0);
    assert_eq!(path.counts.active, 0);
}

#[test]
fn reconstruction_matches_engine() {
    let model = scenarios::reference_model();
    for seed in 0..3 {
        let (_, dec) =
            simulate_with_aux(params(16), &model, seed, 1.0, &[1.0], &RunOptions::default(), AuxConfig::default()).unwrap();
        assert!(dec.reconstruction_error <= 1e-9, "{}", dec.reconstruction_error);
        assert!(dec.active.len() > 1);
    }
}

#[test]
fn replay_detects_foreign_seed() {
    let model = scenarios::reference_model();
    let path = simulate_path(params(16), &model, 3, 0.5, &[0.5], &RunOptions::default()).unwrap();
    assert!(decompose(params(16), &model, &path, AuxConfig::default()).is_ok());
    let mut forged = path.clone();
    forged.seed = 4;
    assert!(matches!(decompose(params(16), &model, &forged, AuxConfig::default()), Err(Error::SeedMismatch { .. })));
}

#[test]
fn v1_v2_non_decreasing() {
    let model = scenarios::reference_model();
    let cfg = AuxConfig { keep_fields: true, kernels: None };
    let (_, dec) = simulate_with_aux(params(16), &model, 8, 1.0, &[], &RunOptions::default(), cfg).unwrap();
    for w in dec.active.windows(2) {
        let (a, b) = (w[0].fields.as_ref().unwrap(), w[1].fields.as_ref().unwrap());
        for k in 0..2 {
            for (j, v) in a[k].v1.touched() {
                assert!(b[k].v1.get(j) >= v);
            }
            for (j, v) in a[k].v2.touched() {
                assert!(b[k].v2.get(j) >= v);
            }
        }
    }
}

#[test]
fn hat_is_book_at_last_active_time() {
    let model = scenarios::reference_model();
    let cfg = AuxConfig { keep_fields: true, kernels: None };
    let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    let (path, dec) = simulate_with_aux(params(16), &model, 2, 1.0, &times, &RunOptions::default(), cfg).unwrap();
    for &t in &times {
        let k = dec.hat_index(t);
        let frozen = dec.active[k].book.as_ref().unwrap();
        let hat = dec.snapshot_at(t).unwrap();
        for side in Side::BOTH {
            let i = if side == Side::Bid { 0 } else { 1 };
            assert_eq!(l2_distance_squared(hat.hat(side), &frozen[i]), 0.0);
        }
        assert_eq!(hat.active_count, k);
        let _ = path.snapshot_at(t).unwrap();
    }
    // before the first active event the hatted book is the initial one
    assert_eq!(dec.hat_index(dec.active[1].time * 0.5), 0);
    // right-continuity at an active time
    assert_eq!(dec.hat_index(dec.active[3].time), 3);
}

#[test]
fn barred_identity_at_grid_points() {
    let n = 16;
    let model = scenarios::reference_model();
    let cfg = AuxConfig { keep_fields: true, kernels: None };
    let times: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
    let (_, dec) = simulate_with_aux(params(n), &model, 6, 1.0, &times, &RunOptions::default(), cfg).unwrap();
    let tc = TimeChange::new(n, dec.active_times()).unwrap();
    for &u in &times {
        let eta = tc.eta(u);
        let barred = dec.barred(eta).unwrap();
        let hat = dec.snapshot_at(u).unwrap();
        let book = barred.book.as_ref().unwrap();
        assert_eq!(l2_distance_squared(hat.hat(Side::Bid), &book[0]), 0.0);
        assert_eq!(l2_distance_squared(hat.hat(Side::Ask), &book[1]), 0.0);
    }
    let dx = params(n).delta_x;
    for w in dec.active.windows(2) {
        assert!((w[1].ask - w[0].ask).abs() <= 1);
        let jump = (w[1].ask - w[0].ask) as f64 * dx;
        assert!(jump == 0.0 || (jump.abs() - dx).abs() < 1e-15);
    }
    assert_eq!(dec.barred(0.5 / n as f64).unwrap().time, 0.0);
}
