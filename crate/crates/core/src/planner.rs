//! Exhaustive search of the discretized `(r, d)` grid.
//!
//! Ties on `q` go to the smaller delay, then the smaller redundancy. Grid rows
//! are always ordered by `r` then `d`, whatever the evaluation schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{recovery_rate_exact, recovery_rate_gaussian};
use crate::error::{domain, Result};
use crate::qoe::{eval_qoe, QoeBreakdown, QoeParams};
use crate::types::{NetworkState, SystemParams, TransmissionPlan, INTEGRAL_TOL};

/// Which recovery-rate model the planner optimizes against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiSource {
    #[default]
    Gaussian,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub plan: TransmissionPlan,
    pub xi: f64,
    pub qoe: QoeBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_plan: TransmissionPlan,
    pub best_xi: f64,
    pub best_qoe: QoeBreakdown,
    pub grid: Vec<GridRow>,
}

/// `{0, step, 2*step, ..., max}`; the endpoint is included when it lies
/// within tolerance of a step multiple.
fn axis(step: f64, max: f64) -> Vec<f64> {
    let count = ((max / step) + INTEGRAL_TOL).floor() as usize;
    (0..=count)
        .map(|i| {
            let v = i as f64 * step;
            if (v - max).abs() <= INTEGRAL_TOL { max } else { v }
        })
        .collect()
}

/// Cartesian product of the redundancy and delay axes, `r`-major.
pub fn enumerate_grid(sys: &SystemParams) -> Vec<TransmissionPlan> {
    let ds = axis(sys.d_step, sys.d_max);
    axis(sys.r_step, sys.r_max)
        .into_iter()
        .flat_map(|r| ds.iter().map(move |&d| TransmissionPlan::new(r, d)))
        .collect()
}

fn evaluate(
    net: &NetworkState,
    sys: &SystemParams,
    qoe: &QoeParams,
    plan: TransmissionPlan,
    source: XiSource,
) -> Result<GridRow> {
    let xi = match source {
        XiSource::Gaussian => recovery_rate_gaussian(net, sys, &plan)?,
        XiSource::Exact => recovery_rate_exact(net, sys, &plan)?,
    };
    let qoe = eval_qoe(plan.d * net.t_l, plan.r, xi, qoe)?;
    Ok(GridRow { plan, xi, qoe })
}

fn better(a: &GridRow, b: &GridRow) -> bool {
    if a.qoe.q != b.qoe.q {
        return a.qoe.q > b.qoe.q;
    }
    if a.plan.d != b.plan.d {
        return a.plan.d < b.plan.d;
    }
    a.plan.r < b.plan.r
}

fn search(
    net: &NetworkState,
    sys: &SystemParams,
    qoe: &QoeParams,
    plans: Vec<TransmissionPlan>,
    source: XiSource,
) -> Result<OptimResult> {
    net.validate()?;
    sys.validate()?;
    qoe.validate()?;
    let grid = plans
        .into_par_iter()
        .map(|plan| evaluate(net, sys, qoe, plan, source))
        .collect::<Result<Vec<_>>>()?;
    let best = *grid
        .iter()
        .reduce(|best, row| if better(row, best) { row } else { best })
        .ok_or_else(|| domain("empty search grid"))?;
    Ok(OptimResult { best_plan: best.plan, best_xi: best.xi, best_qoe: best.qoe, grid })
}

/// Maximizes QoE over the full `(r, d)` grid using the Gaussian recovery rate.
pub fn optimize(net: &NetworkState, sys: &SystemParams, qoe: &QoeParams) -> Result<OptimResult> {
    optimize_with(net, sys, qoe, XiSource::Gaussian)
}

pub fn optimize_with(
    net: &NetworkState,
    sys: &SystemParams,
    qoe: &QoeParams,
    source: XiSource,
) -> Result<OptimResult> {
    search(net, sys, qoe, enumerate_grid(sys), source)
}

/// Dynamic redundancy with the delay pinned to `fixed_d`.
pub fn plan_dr(
    net: &NetworkState,
    sys: &SystemParams,
    qoe: &QoeParams,
    fixed_d: f64,
) -> Result<OptimResult> {
    if !(fixed_d >= 0.0 && fixed_d <= sys.d_max + INTEGRAL_TOL) {
        return Err(domain(format!("fixed delay {fixed_d} outside [0, d_max={}]", sys.d_max)));
    }
    let plans = axis(sys.r_step, sys.r_max)
        .into_iter()
        .map(|r| TransmissionPlan::new(r, fixed_d))
        .collect();
    search(net, sys, qoe, plans, XiSource::Gaussian)
}

/// Dynamic delay with the redundancy pinned to `fixed_r`.
pub fn plan_dd(
    net: &NetworkState,
    sys: &SystemParams,
    qoe: &QoeParams,
    fixed_r: f64,
) -> Result<OptimResult> {
    if !(fixed_r >= 0.0 && fixed_r <= sys.r_max + INTEGRAL_TOL) {
        return Err(domain(format!("fixed redundancy {fixed_r} outside [0, r_max={}]", sys.r_max)));
    }
    if sys.fec_packets(fixed_r).is_none() {
        return Err(domain(format!(
            "fixed redundancy {fixed_r} gives a non-integral FEC count {}",
            f64::from(sys.m) * fixed_r
        )));
    }
    let plans = axis(sys.d_step, sys.d_max)
        .into_iter()
        .map(|d| TransmissionPlan::new(fixed_r, d))
        .collect();
    search(net, sys, qoe, plans, XiSource::Gaussian)
}
