//! Analytic oracles and the statistics used to compare discrete paths with
//! the limit.

mod oracles;
mod sweep;
mod testing;

pub use oracles::{beta_gap_moments, simulate_beta_gap, NBOracle};
pub use sweep::{
    convergence_sweep, default_task_seed, ConvergenceReport, Functional, LimitSamples, ScaleReport, SweepConfig, SweepTask,
    TrendRecord,
};
pub use testing::{
    chi_square_gof, fit_through_origin, ks_critical, ks_distance, ks_sorted, mean_and_se, normal_quantile,
    paired_trend_test, variance_and_se, ChiSquareTest, OriginFit, TrendTest,
};

use crate::engine::PathRecord;
use crate::error::{Error, Result};
use crate::model::{Kernel, Side};

/// Sorted `⟨v^n(t), φ⟩` over `paths`.
pub fn functional_sample(paths: &[PathRecord], t: f64, phi: &Kernel, side: Side) -> Result<Vec<f64>> {
    if paths.windows(2).any(|w| w[0].n != w[1].n || w[0].horizon != w[1].horizon) {
        return Err(Error::InvalidArgument("paths come from different configurations".into()));
    }
    let mut out = paths
        .iter()
        .map(|p| Ok(p.snapshot_at(t)?.density(side).pairing(phi, 0.0)))
        .collect::<Result<Vec<f64>>>()?;
    out.sort_by(f64::total_cmp);
    Ok(out)
}
