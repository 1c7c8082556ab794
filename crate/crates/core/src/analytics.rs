//! Slot decomposition, loss-count moments and the recovery rate of a packet
//! group, computed both by the Gaussian approximation and exactly.
//!
//! The group timeline is cut into RTT slots counted back from the deadline.
//! Every one of the `N` slots holds `M` data packets, and a packet in slot `j`
//! gets `j + d` transmission attempts, so it is still missing at the deadline
//! with probability `p^(j + d)`. `N * M` can exceed `m`; this is the model as
//! stated and [`crate::sim::SimMode::Timeline`] measures the gap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::std_normal_cdf;
use crate::types::{NetworkState, SystemParams, TransmissionPlan};

/// Largest support (`N*M + m*r`) the exact oracle will convolve.
pub const EXACT_SUPPORT_LIMIT: usize = 10_000;

// Guards floor() against representation error, e.g. 0.3 / 0.1 = 2.9999999999999996.
const FLOOR_EPS: f64 = 1e-9;

fn floor_tol(x: f64) -> f64 {
    (x + FLOOR_EPS).floor()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotLayout {
    /// Data-packet spacing in units of 100 ms.
    pub packet_interval: f64,
    /// Packets per RTT slot.
    pub per_slot: u32,
    /// Number of RTT slots.
    pub slots: u32,
    /// `p^(j + d)` for `j = 1..=slots`.
    pub slot_failure: Vec<f64>,
}

/// Means and variances of the lost data (`X_m`), FEC (`X_r`) and total
/// (`X_a`) packet counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossMoments {
    pub mu_m: f64,
    pub var_m: f64,
    pub mu_r: f64,
    pub var_r: f64,
    pub mu_a: f64,
    pub var_a: f64,
}

fn validate_all(net: &NetworkState, sys: &SystemParams, plan: &TransmissionPlan) -> Result<u32> {
    net.validate()?;
    sys.validate()?;
    plan.validate(sys)
}

pub fn slot_decomposition(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
) -> Result<SlotLayout> {
    validate_all(net, sys, plan)?;
    let t0 = sys.packet_interval();
    if t0 > net.t_l {
        return Err(Error::Config(format!(
            "packet interval {t0} exceeds round-trip time {}; a slot would hold no packets",
            net.t_l
        )));
    }
    let per_slot = floor_tol(net.t_l / t0) as u32;
    let span = f64::from(sys.m) * t0 + plan.d * net.t_l;
    // An empty sum would mean no data loss at all; keep at least one slot.
    let slots = (floor_tol(span / net.t_l) as u32).max(1);
    let slot_failure = (1..=slots)
        .map(|j| net.p.powf(f64::from(j) + plan.d))
        .collect();
    Ok(SlotLayout { packet_interval: t0, per_slot, slots, slot_failure })
}

pub fn loss_moments(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
) -> Result<LossMoments> {
    let layout = slot_decomposition(net, sys, plan)?;
    let fec = f64::from(plan.validate(sys)?);
    Ok(moments_from_layout(&layout, fec, net.p))
}

fn moments_from_layout(layout: &SlotLayout, fec: f64, p: f64) -> LossMoments {
    let m = f64::from(layout.per_slot);
    let (mu_m, var_m) = layout
        .slot_failure
        .iter()
        .fold((0.0, 0.0), |(mu, var), &q| (mu + m * q, var + m * q * (1.0 - q)));
    let mu_r = fec * p;
    let var_r = fec * p * (1.0 - p);
    LossMoments { mu_m, var_m, mu_r, var_r, mu_a: mu_m + mu_r, var_a: var_m + var_r }
}

/// Gaussian-approximation recovery rate `Phi((m*r - mu_a) / sigma_a)`.
pub fn recovery_rate_gaussian(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
) -> Result<f64> {
    recovery_rate_gaussian_with(net, sys, plan, std_normal_cdf)
}

/// As [`recovery_rate_gaussian`] with a caller-supplied normal CDF.
///
/// A zero variance is evaluated as `cdf(+inf)` when `m*r >= mu_a` and
/// `cdf(-inf)` otherwise.
pub fn recovery_rate_gaussian_with<F>(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
    cdf: F,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let layout = slot_decomposition(net, sys, plan)?;
    let fec = f64::from(plan.validate(sys)?);
    let mom = moments_from_layout(&layout, fec, net.p);
    let z = if mom.var_a > 0.0 {
        (fec - mom.mu_a) / mom.var_a.sqrt()
    } else if fec >= mom.mu_a {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    Ok(cdf(z).clamp(0.0, 1.0))
}

/// Compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn kahan_total<'a>(xs: impl IntoIterator<Item = &'a f64>) -> f64 {
    let mut acc = KahanSum::default();
    xs.into_iter().for_each(|&x| acc.add(x));
    acc.sum
}

/// PMF of Binomial(n, q), evaluated in log space so large `n` does not underflow.
pub(crate) fn binomial_pmf(n: u32, q: f64) -> Vec<f64> {
    let len = n as usize + 1;
    if q <= 0.0 {
        let mut v = vec![0.0; len];
        v[0] = 1.0;
        return v;
    }
    if q >= 1.0 {
        let mut v = vec![0.0; len];
        v[n as usize] = 1.0;
        return v;
    }
    let ln_q = q.ln();
    let ln_not_q = (-q).ln_1p();
    let nf = f64::from(n);
    let mut ln_choose = 0.0;
    (0..=n)
        .map(|k| {
            let kf = f64::from(k);
            if k > 0 {
                ln_choose += (nf - kf + 1.0).ln() - kf.ln();
            }
            (ln_choose + kf * ln_q + (nf - kf) * ln_not_q).exp()
        })
        .collect()
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    (0..len)
        .map(|i| {
            let lo = i.saturating_sub(b.len() - 1);
            let hi = i.min(a.len() - 1);
            let mut acc = KahanSum::default();
            for j in lo..=hi {
                acc.add(a[j] * b[i - j]);
            }
            acc.sum
        })
        .collect()
}

/// Full PMF of the total lost-packet count `X_a` under the slot model.
///
/// Index `k` holds `P(X_a = k)`; the vector has `N*M + m*r + 1` entries.
pub fn total_loss_pmf(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
) -> Result<Vec<f64>> {
    let layout = slot_decomposition(net, sys, plan)?;
    let fec = plan.validate(sys)?;
    let support = layout.slots as usize * layout.per_slot as usize + fec as usize;
    if support > EXACT_SUPPORT_LIMIT {
        return Err(Error::Capacity { size: support, limit: EXACT_SUPPORT_LIMIT });
    }
    let mut pmf = vec![1.0];
    for &q in &layout.slot_failure {
        pmf = convolve(&pmf, &binomial_pmf(layout.per_slot, q));
    }
    Ok(convolve(&pmf, &binomial_pmf(fec, net.p)))
}

/// Exact `P(X_a <= m*r)` by convolving the per-slot and FEC binomials.
pub fn recovery_rate_exact(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
) -> Result<f64> {
    let pmf = total_loss_pmf(net, sys, plan)?;
    let fec = plan.validate(sys)? as usize;
    Ok(kahan_total(&pmf[..=fec]).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub plan: TransmissionPlan,
    pub xi_exact: f64,
    pub xi_gauss: f64,
    pub abs_diff: f64,
}

/// Per-plan comparison of the Gaussian recovery rate against the exact one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    /// Zero for an empty grid.
    pub max_abs_diff: f64,
}

impl ErrorReport {
    /// Row with the largest gap, first one on ties.
    pub fn worst(&self) -> Option<&ErrorRow> {
        self.rows
            .iter()
            .reduce(|best, row| if row.abs_diff > best.abs_diff { row } else { best })
    }
}

pub fn gaussian_error_report(
    net: &NetworkState,
    sys: &SystemParams,
    grid: &[TransmissionPlan],
) -> Result<ErrorReport> {
    gaussian_error_report_with(net, sys, grid, std_normal_cdf)
}

pub fn gaussian_error_report_with<F>(
    net: &NetworkState,
    sys: &SystemParams,
    grid: &[TransmissionPlan],
    cdf: F,
) -> Result<ErrorReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    let rows = grid
        .par_iter()
        .map(|plan| {
            let xi_exact = recovery_rate_exact(net, sys, plan)?;
            let xi_gauss = recovery_rate_gaussian_with(net, sys, plan, &cdf)?;
            Ok(ErrorRow { plan: *plan, xi_exact, xi_gauss, abs_diff: (xi_exact - xi_gauss).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(ErrorReport { rows, max_abs_diff })
}
