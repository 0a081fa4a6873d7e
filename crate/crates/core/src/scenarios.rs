//! Ready-made model configurations used by the test suites and as starting
//! points for experiment files.

use crate::model::{
    EventDensity, EventTypeSpec, InitialCondition, Kernel, ModelSpec, OrderFlowSpec, PriceMoveSpec, PricePreset,
    Profile, SideFlow, SizeDist,
};

/// Initial best prices. Both are multiples of `1/16`, so they sit exactly on
/// the tick grid for every `n` in `{16, 64, 256}` and within a small fraction
/// of a tick for `n` in `{32, 128}`.
pub const BID0: f64 = -1.75;
pub const ASK0: f64 = 1.25;

fn tg(mean: f64, sd: f64) -> EventDensity {
    EventDensity::truncated_gaussian(mean, sd, -1.0, 1.0).expect("static density")
}

/// Smooth flow with nontrivial cancellation, placement and noise on both sides.
pub fn reference_flow() -> OrderFlowSpec {
    OrderFlowSpec::symmetric(SideFlow {
        cancel: EventTypeSpec::new(SizeDist::Beta { alpha: 2.0, beta: 2.0 }, tg(0.0, 0.4)),
        place: EventTypeSpec::new(SizeDist::Gamma { shape: 2.0, scale: 0.5 }, tg(-0.2, 0.35)),
        noise: EventTypeSpec::new(SizeDist::Uniform { lo: 0.0, hi: 1.0 }, tg(0.1, 0.3)),
    })
}

/// Only noise events carry volume; placements and cancellations are empty.
pub fn noise_only_flow() -> OrderFlowSpec {
    OrderFlowSpec::symmetric(SideFlow {
        cancel: EventTypeSpec::new(SizeDist::zero(), tg(0.0, 0.4)),
        place: EventTypeSpec::new(SizeDist::zero(), tg(0.0, 0.4)),
        noise: EventTypeSpec::new(SizeDist::Uniform { lo: 0.0, hi: 1.0 }, tg(0.1, 0.3)),
    })
}

pub fn reference_initial() -> InitialCondition {
    InitialCondition {
        bid: BID0,
        ask: ASK0,
        v_bid: Profile::Gaussian { base: 1.0, height: 0.5, center: BID0, width: 0.5 },
        v_ask: Profile::Gaussian { base: 1.0, height: 0.5, center: ASK0, width: 0.5 },
    }
}

/// Unit-mass bump used for the volume statistic, centred on the best price.
pub fn y_kernel() -> Kernel {
    Kernel::GaussianBump { center: 0.0, width: 0.3, radius: 0.6, amplitude: 1.0 }.normalized()
}

/// Three test functions per side at distinct offsets and widths, relative to
/// the initial best price of that side.
pub fn test_functions(center: f64) -> [Kernel; 3] {
    [
        Kernel::GaussianBump { center: center - 0.3, width: 0.25, radius: 0.5, amplitude: 1.0 },
        Kernel::GaussianBump { center, width: 0.4, radius: 0.8, amplitude: 1.0 },
        Kernel::GaussianBump { center: center + 0.35, width: 0.2, radius: 0.45, amplitude: 1.0 },
    ]
}

pub fn volume_imbalance_preset() -> PricePreset {
    PricePreset::VolumeImbalance { kappa: 0.2, sigma: 0.3, sigma_slope: 0.5, scale: 0.5 }
}

/// State-dependent prices driven by the bid/ask volume imbalance.
pub fn reference_model() -> ModelSpec {
    ModelSpec {
        flow: reference_flow(),
        price: PriceMoveSpec::new(volume_imbalance_preset()).with_kernels(y_kernel(), y_kernel()),
        initial: reference_initial(),
    }
}

/// Reference flow with prices that never move.
pub fn frozen_model() -> ModelSpec {
    ModelSpec { flow: reference_flow(), price: PriceMoveSpec::frozen(), initial: reference_initial() }
}

/// Frozen prices and noise-only flow.
pub fn noise_only_model() -> ModelSpec {
    ModelSpec { flow: noise_only_flow(), price: PriceMoveSpec::frozen(), initial: reference_initial() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_validate() {
        for m in [reference_model(), frozen_model(), noise_only_model()] {
            m.validate().unwrap();
        }
    }
}
