use thiserror::Error;

use crate::model::Side;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The requested conditional mean/variance cannot be realised by a pmf on {-1, 0, +1}.
    #[error("infeasible price-move moments on the {side} side: mean {mean}, second moment {second}")]
    InfeasibleMoments { side: Side, mean: f64, second: f64 },

    #[error("common-factor coupling cannot realise covariance {target} (attainable range [{lo}, {hi}])")]
    InfeasibleCoupling { target: f64, lo: f64, hi: f64 },

    #[error("crossed book at t={time}: bid tick {bid} above ask tick {ask}")]
    CrossedBook { time: f64, bid: i64, ask: i64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("replay diverged from the recorded path at snapshot t={time}")]
    SeedMismatch { time: f64 },

    #[error("no active events up to the horizon; the time change is undefined beyond u = 1/n")]
    NotEnoughActiveEvents,

    #[error("price {price} is within the support radius {radius} of the grid boundary [{lo}, {hi}] at t={time}")]
    GridBreach {
        time: f64,
        price: f64,
        radius: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no snapshot recorded at t={0}")]
    SnapshotMissing(f64),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
