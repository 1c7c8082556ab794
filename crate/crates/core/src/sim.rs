//! Monte Carlo simulation of one packet group.
//!
//! [`SimMode::Slot`] draws exactly the losses the analytic slot model
//! describes (`N` slots of `M` data packets plus `m*r` FEC packets), so its
//! estimates converge to [`crate::analytics::recovery_rate_exact`].
//! [`SimMode::Timeline`] instead schedules the real `m` data packets at
//! spacing `T0` and retransmits each lost one every `t_l` until the deadline.
//!
//! Each trial owns a ChaCha8 stream selected by its index under the root
//! seed, so a report depends only on its inputs and never on thread count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::slot_decomposition;
use crate::error::{domain, Error, Result};
use crate::types::{NetworkState, SystemParams, TransmissionPlan};

const TIME_EPS: f64 = 1e-9;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Slot,
    Timeline,
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMode::Slot => "slot",
            SimMode::Timeline => "timeline",
        })
    }
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slot" => Ok(SimMode::Slot),
            "timeline" => Ok(SimMode::Timeline),
            other => Err(domain(format!("unknown simulation mode '{other}' (slot|timeline)"))),
        }
    }
}

/// Packet counts at the receive deadline.
///
/// `data_sent` is `m` in timeline mode and `N*M` in slot mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub data_sent: u32,
    pub fec_sent: u32,
    pub s_m: u32,
    pub s_r: u32,
    pub s_a: u32,
    pub x_m: u32,
    pub x_r: u32,
    pub x_a: u32,
    pub recovered: bool,
}

impl GroupOutcome {
    fn from_losses(data_sent: u32, fec_sent: u32, x_m: u32, x_r: u32) -> Self {
        let s_m = data_sent - x_m;
        let s_r = fec_sent - x_r;
        let x_a = x_m + x_r;
        let outcome = Self {
            data_sent,
            fec_sent,
            s_m,
            s_r,
            s_a: s_m + s_r,
            x_m,
            x_r,
            x_a,
            recovered: x_a <= fec_sent,
        };
        debug_assert!(outcome.is_consistent(), "{outcome:?}");
        outcome
    }

    /// Count conservation, and agreement of the loss-based and the
    /// receipt-based recovery conditions.
    pub fn is_consistent(&self) -> bool {
        self.s_m + self.x_m == self.data_sent
            && self.s_r + self.x_r == self.fec_sent
            && self.s_a == self.s_m + self.s_r
            && self.x_a == self.x_m + self.x_r
            && self.recovered == (self.x_a <= self.fec_sent)
            && self.recovered == (self.s_a >= self.data_sent)
    }
}

/// Precomputed per-packet loss structure of one group.
#[derive(Debug, Clone)]
enum Channel {
    Slot { per_slot: u32, slot_failure: Vec<f64>, fec: u32, p: f64 },
    Timeline { attempts: Vec<u32>, fec: u32, p: f64 },
}

impl Channel {
    fn new(mode: SimMode, net: &NetworkState, sys: &SystemParams, plan: &TransmissionPlan) -> Result<Self> {
        let layout = slot_decomposition(net, sys, plan)?;
        let fec = plan.validate(sys)?;
        Ok(match mode {
            SimMode::Slot => Channel::Slot {
                per_slot: layout.per_slot,
                slot_failure: layout.slot_failure,
                fec,
                p: net.p,
            },
            SimMode::Timeline => Channel::Timeline {
                attempts: timeline_attempts(net, sys, plan, layout.packet_interval),
                fec,
                p: net.p,
            },
        })
    }

    fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupOutcome {
        match self {
            Channel::Slot { per_slot, slot_failure, fec, p } => {
                let x_m = slot_failure
                    .iter()
                    .map(|&q| (0..*per_slot).filter(|_| rng.random::<f64>() < q).count() as u32)
                    .sum();
                let x_r = (0..*fec).filter(|_| rng.random::<f64>() < *p).count() as u32;
                GroupOutcome::from_losses(per_slot * slot_failure.len() as u32, *fec, x_m, x_r)
            }
            Channel::Timeline { attempts, fec, p } => {
                let x_m = attempts
                    .iter()
                    .filter(|&&n| (0..n).all(|_| rng.random::<f64>() < *p))
                    .count() as u32;
                let x_r = (0..*fec).filter(|_| rng.random::<f64>() < *p).count() as u32;
                GroupOutcome::from_losses(attempts.len() as u32, *fec, x_m, x_r)
            }
        }
    }
}

/// Attempts available to each data packet before the deadline.
///
/// Packet `i` is first sent at `i*T0` and resent every `t_l` after a NACK. An
/// attempt sent at time `s` is usable when `s + t_l` does not pass the
/// deadline `(m-1)*T0 + t_l*(1 + d)`, which leaves the last packet `1 + d`
/// attempts.
fn timeline_attempts(net: &NetworkState, sys: &SystemParams, plan: &TransmissionPlan, t0: f64) -> Vec<u32> {
    let last = sys.m - 1;
    (0..sys.m)
        .map(|i| {
            let slack = f64::from(last - i) * t0 + plan.d * net.t_l;
            (slack / net.t_l + TIME_EPS).floor() as u32 + 1
        })
        .collect()
}

/// Draws one group under the slot model.
pub fn simulate_group_slot_model<R: Rng + ?Sized>(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
    rng: &mut R,
) -> Result<GroupOutcome> {
    Ok(Channel::new(SimMode::Slot, net, sys, plan)?.run(rng))
}

/// Draws one group on the packet timeline with NACK retransmission.
pub fn simulate_group_timeline<R: Rng + ?Sized>(
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
    rng: &mut R,
) -> Result<GroupOutcome> {
    Ok(Channel::new(SimMode::Timeline, net, sys, plan)?.run(rng))
}

/// RNG for trial `trial` under root `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Independent root seed for the `index`-th point of a sweep (SplitMix64).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(phat), (center + half).min(1.0).max(phat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: SimMode,
    pub trials: u64,
    pub recoveries: u64,
    pub xi_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl SimReport {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Runs `trials` independent groups and reports the empirical recovery rate.
///
/// Trials are spread over the current rayon pool.
pub fn estimate_recovery_rate(
    mode: SimMode,
    net: &NetworkState,
    sys: &SystemParams,
    plan: &TransmissionPlan,
    trials: u64,
    seed: u64,
) -> Result<SimReport> {
    if trials == 0 {
        return Err(domain("trial count must be at least 1"));
    }
    let channel = Channel::new(mode, net, sys, plan)?;
    let recoveries: u64 = (0..trials)
        .into_par_iter()
        .map(|t| u64::from(channel.run(&mut trial_rng(seed, t)).recovered))
        .sum();
    let (ci_low, ci_high) = wilson_interval(recoveries, trials);
    Ok(SimReport {
        mode,
        trials,
        recoveries,
        xi_hat: recoveries as f64 / trials as f64,
        ci_low,
        ci_high,
        seed,
    })
}
