//! Analytics for joint buffer-delay and FEC-redundancy tuning of packet
//! groups sent over an i.i.d. lossy link with NACK retransmission.
//!
//! * [`qoe`]: piecewise scores for delay, redundancy and recovery rate.
//! * [`analytics`]: slot model, loss moments, Gaussian and exact recovery rates.
//! * [`planner`]: exhaustive `(r, d)` search plus the fixed-delay and
//!   fixed-redundancy baselines.
//! * [`sim`]: seeded Monte Carlo simulation of a group, in slot and timeline modes.

pub mod analytics;
pub mod error;
pub mod normal;
pub mod planner;
pub mod qoe;
pub mod sim;
pub mod types;

pub use analytics::{
    gaussian_error_report, loss_moments, recovery_rate_exact, recovery_rate_gaussian,
    slot_decomposition, ErrorReport, ErrorRow, LossMoments, SlotLayout,
};
pub use error::{Error, Result};
pub use normal::std_normal_cdf;
pub use planner::{
    enumerate_grid, optimize, optimize_with, plan_dd, plan_dr, GridRow, OptimResult, XiSource,
};
pub use qoe::{eval_qoe, QoeBreakdown, QoeParams};
pub use sim::{
    derive_seed, estimate_recovery_rate, simulate_group_slot_model, simulate_group_timeline,
    wilson_interval, GroupOutcome, SimMode, SimReport,
};
pub use types::{NetworkState, SystemParams, TransmissionPlan};
