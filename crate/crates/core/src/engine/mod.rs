//! Event-by-event simulation of the `n`-th discrete book.

mod apply;
mod simulate;
mod stream;

pub use apply::{apply_active, apply_passive, price_inputs, volume_statistic, ActiveEffect, PassiveEffect};
pub use simulate::{
    simulate_observed, simulate_path, EventCounts, Observer, PathRecord, RunOptions, Simulator, Snapshot,
};
pub use stream::{
    build_event_stream, ActiveMarks, Arrival, EventClock, EventDraw, EventKind, EventStream, MarkSource, Marks,
    PassiveMarks, Rates,
};
