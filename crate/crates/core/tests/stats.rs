use rand_distr::{Distribution, StandardNormal};

use loblab_core::engine::{simulate_path, PathRecord, RunOptions};
use loblab_core::model::{Diffusion, Kernel, ModelSpec, PriceMoveSpec, PricePreset, Profile, ScalingParams, Side, SizeDist};
use loblab_core::rng::{substream, StreamTag};
use loblab_core::scenarios::{self, test_functions, BID0};
use loblab_core::stats::{chi_square_gof, functional_sample, ks_critical, ks_distance, NBOracle};
use loblab_core::Error;

fn paths(model: &ModelSpec, n: u32, reps: u64, t: f64) -> Vec<PathRecord> {
    let params = ScalingParams::try_new(n).unwrap();
    (0..reps).map(|i| simulate_path(params, model, 1000 + i, t, &[t], &RunOptions::default()).unwrap()).collect()
}

#[test]
fn zero_book_gives_zero_sample() {
    let mut m = scenarios::frozen_model();
    for s in [&mut m.flow.bid, &mut m.flow.ask] {
        s.noise.size = SizeDist::zero();
        s.place.size = SizeDist::zero();
    }
    m.initial.v_bid = Profile::Constant { value: 0.0 };
    m.initial.v_ask = Profile::Constant { value: 0.0 };
    let ps = paths(&m, 16, 5, 0.5);
    let phi = test_functions(BID0)[0].clone();
    assert!(functional_sample(&ps, 0.5, &phi, Side::Bid).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn zero_test_function_and_missing_snapshot() {
    let ps = paths(&scenarios::reference_model(), 16, 5, 0.5);
    assert!(functional_sample(&ps, 0.5, &Kernel::Zero, Side::Ask).unwrap().iter().all(|&x| x == 0.0));
    let phi = test_functions(BID0)[0].clone();
    assert_eq!(functional_sample(&ps, 0.25, &phi, Side::Bid), Err(Error::SnapshotMissing(0.25)));
    let s = functional_sample(&ps, 0.5, &phi, Side::Bid).unwrap();
    assert!(s.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn split_sample_is_self_consistent() {
    let ps = paths(&scenarios::reference_model(), 16, 400, 0.5);
    let phi = test_functions(BID0)[1].clone();
    let all: Vec<f64> = ps.iter().map(|p| p.snapshot_at(0.5).unwrap().density(Side::Bid).pairing(&phi, 0.0)).collect();
    let (a, b) = all.split_at(200);
    assert!(ks_distance(a, b).unwrap() < ks_critical(0.01, 200, 200));
}

#[test]
fn nb_oracle_matches_the_merged_clock() {
    let nb = NBOracle::new(2, 5.0, 20.0).unwrap();
    let draws = nb.simulate(77, 20_000);
    assert!(chi_square_gof(&draws, |l| nb.pmf(l), 5.0).unwrap().p_value > 0.001);
}

#[test]
fn lattice_price_marginal_approaches_gaussian() {
    let (b, s, t) = (0.3, 0.5, 1.0);
    let mut m = scenarios::noise_only_model();
    m.price = PriceMoveSpec::new(PricePreset::Constant {
        drift_bid: -b,
        drift_ask: b,
        sigma: Diffusion { bid: [s, 0.0], ask: [0.0, s] },
    });
    let mut rng = substream(5, StreamTag::Oracle, 0);
    let exact: Vec<f64> = (0..4000)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            m.initial.ask + b * t + s * t.sqrt() * z
        })
        .collect();
    let ks: Vec<f64> = [4u32, 16, 64]
        .iter()
        .map(|&n| {
            let params = ScalingParams::try_new(n).unwrap();
            let asks: Vec<f64> = paths(&m, n, 400, t)
                .iter()
                .map(|p| params.price_of(p.snapshot_at(t).unwrap().price_tick(Side::Ask)))
                .collect();
            ks_distance(&asks, &exact).unwrap()
        })
        .collect();
    assert!(ks[0] > ks[1] && ks[1] > ks[2], "{ks:?}");
}
