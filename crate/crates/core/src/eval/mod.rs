//! Policies, threshold and routing accuracy, and experiment harnesses.

mod policy;
mod report;
mod sweep;

pub use policy::{apply_policy, Policy, Routed};
pub use report::{evaluate, routing_accuracy, EvalReport, PolicyRow, RoutingAccuracy, RoutingRow};
pub use sweep::{
    holdout_split, sweep_alpha, sweep_csv, sweep_fraction, SweepConfig, SweepRow,
    DEFAULT_ALPHA_GRID,
};
