//! Piecewise-linear evaluation functions for buffer delay, redundancy and
//! recovery rate, and their weighted aggregate.
//!
//! Each segment is closed on the right, so a breakpoint evaluates on the
//! segment to its left. Scores are clamped to `[0, 1]` after evaluation: the
//! default delay curve crosses zero near `d = 5.31` (well before `d2 = 8`),
//! which makes the third delay segment unreachable, and the recovery curve
//! ends at 1.0015 for `xi = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Weights, slopes and breakpoints of the QoE model.
///
/// Delay quantities use units of 100 ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoeParams {
    pub h_d: f64,
    pub h_r: f64,
    pub h_xi: f64,
    pub k_d1: f64,
    pub k_d2: f64,
    pub k_d3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub k_r1: f64,
    pub r1: f64,
    pub k_xi1: f64,
    pub k_xi2: f64,
    pub k_xi3: f64,
    pub xi1: f64,
    pub xi2: f64,
}

impl Default for QoeParams {
    fn default() -> Self {
        Self {
            h_d: 0.3,
            h_r: 0.3,
            h_xi: 0.4,
            k_d1: 0.04,
            k_d2: 0.32,
            k_d3: 0.07,
            d1: 2.5,
            d2: 8.0,
            d3: 31.0,
            k_r1: 2.0,
            r1: 0.5,
            k_xi1: 0.40,
            k_xi2: 1.67,
            k_xi3: 1.00,
            xi1: 0.5,
            xi2: 0.95,
        }
    }
}

/// Allowed deviation of `h_d + h_r + h_xi` from 1.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

impl QoeParams {
    /// Checks the weight sum, slope signs and breakpoint ordering.
    ///
    /// Error messages name the offending field so config loaders can surface them.
    pub fn validate(&self) -> Result<()> {
        let weights = [("h_d", self.h_d), ("h_r", self.h_r), ("h_xi", self.h_xi)];
        for (name, w) in weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(domain(format!("weight {name}={w} outside [0,1]")));
            }
        }
        let sum = self.h_d + self.h_r + self.h_xi;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(domain(format!(
                "weights h_d + h_r + h_xi must sum to 1 (got {sum})"
            )));
        }
        let slopes = [
            ("k_d1", self.k_d1),
            ("k_d2", self.k_d2),
            ("k_d3", self.k_d3),
            ("k_r1", self.k_r1),
            ("k_xi1", self.k_xi1),
            ("k_xi2", self.k_xi2),
            ("k_xi3", self.k_xi3),
        ];
        for (name, k) in slopes {
            if !(k.is_finite() && k > 0.0) {
                return Err(domain(format!("slope {name}={k} must be > 0")));
            }
        }
        if !(0.0 < self.d1 && self.d1 < self.d2 && self.d2 < self.d3 && self.d3.is_finite()) {
            return Err(domain(format!(
                "delay breakpoints must satisfy 0 < d1 < d2 < d3 (got {}, {}, {})",
                self.d1, self.d2, self.d3
            )));
        }
        if !(self.r1.is_finite() && self.r1 > 0.0) {
            return Err(domain(format!("redundancy breakpoint r1={} must be > 0", self.r1)));
        }
        if !(0.0 < self.xi1 && self.xi1 < self.xi2 && self.xi2 < 1.0) {
            return Err(domain(format!(
                "recovery breakpoints must satisfy 0 < xi1 < xi2 < 1 (got {}, {})",
                self.xi1, self.xi2
            )));
        }
        Ok(())
    }
}

/// Component scores and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoeBreakdown {
    pub q_d: f64,
    pub q_r: f64,
    pub q_xi: f64,
    pub q: f64,
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

// Unclamped delay curve; later segments anchor on the unclamped value at the
// previous breakpoint so the line stays continuous.
fn raw_delay(d: f64, qp: &QoeParams) -> f64 {
    let at_d1 = 1.0 - qp.k_d1 * qp.d1;
    let at_d2 = at_d1 - qp.k_d2 * (qp.d2 - qp.d1);
    if d <= qp.d1 {
        1.0 - qp.k_d1 * d
    } else if d <= qp.d2 {
        at_d1 - qp.k_d2 * (d - qp.d1)
    } else if d <= qp.d3 {
        at_d2 - qp.k_d3 * (d - qp.d2)
    } else {
        0.0
    }
}

fn raw_recovery(xi: f64, qp: &QoeParams) -> f64 {
    let at_xi1 = qp.k_xi1 * qp.xi1;
    let at_xi2 = at_xi1 + qp.k_xi2 * (qp.xi2 - qp.xi1);
    if xi <= qp.xi1 {
        qp.k_xi1 * xi
    } else if xi <= qp.xi2 {
        at_xi1 + qp.k_xi2 * (xi - qp.xi1)
    } else {
        at_xi2 + qp.k_xi3 * (xi - qp.xi2)
    }
}

/// Delay score for a buffer delay `d` expressed in units of 100 ms.
pub fn eval_delay_score(d: f64, qp: &QoeParams) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(domain(format!("buffer delay {d} must be >= 0")));
    }
    Ok(clamp_unit(raw_delay(d, qp)))
}

pub fn eval_redundancy_score(r: f64, qp: &QoeParams) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(domain(format!("redundancy {r} must be >= 0")));
    }
    let raw = if r <= qp.r1 { 1.0 - qp.k_r1 * r } else { 0.0 };
    Ok(clamp_unit(raw))
}

pub fn eval_recovery_score(xi: f64, qp: &QoeParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(domain(format!("recovery rate {xi} outside [0,1]")));
    }
    Ok(clamp_unit(raw_recovery(xi, qp)))
}

/// Scores a configuration. `d` is the buffer delay in units of 100 ms
/// (the plan's delay multiplier times `t_l`).
pub fn eval_qoe(d: f64, r: f64, xi: f64, qp: &QoeParams) -> Result<QoeBreakdown> {
    let q_d = eval_delay_score(d, qp)?;
    let q_r = eval_redundancy_score(r, qp)?;
    let q_xi = eval_recovery_score(xi, qp)?;
    let q = qp.h_d * q_d + qp.h_r * q_r + qp.h_xi * q_xi;
    Ok(QoeBreakdown { q_d, q_r, q_xi, q: clamp_unit(q) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn table() -> QoeParams {
        QoeParams::default()
    }

    #[test]
    fn delay_examples() {
        let qp = table();
        assert_eq!(eval_delay_score(0.0, &qp).unwrap(), 1.0);
        assert!((eval_delay_score(2.0, &qp).unwrap() - 0.92).abs() < TOL);
        assert_eq!(eval_delay_score(6.0, &qp).unwrap(), 0.0);
        assert_eq!(eval_delay_score(40.0, &qp).unwrap(), 0.0);
        assert!(eval_delay_score(-0.1, &qp).is_err());
        assert!(eval_delay_score(f64::NAN, &qp).is_err());
    }

    #[test]
    fn delay_zero_crossing_before_d2() {
        // 0.9 - 0.32 * (d - 2.5) = 0  =>  d = 5.3125
        let qp = table();
        assert!(eval_delay_score(5.3, &qp).unwrap() > 0.0);
        assert_eq!(eval_delay_score(5.32, &qp).unwrap(), 0.0);
        assert!(raw_delay(qp.d2 + 1.0, &qp) < 0.0);
    }

    #[test]
    fn redundancy_examples() {
        let qp = table();
        assert_eq!(eval_redundancy_score(0.0, &qp).unwrap(), 1.0);
        assert!((eval_redundancy_score(0.25, &qp).unwrap() - 0.5).abs() < TOL);
        assert_eq!(eval_redundancy_score(0.6, &qp).unwrap(), 0.0);
        assert!(eval_redundancy_score(-0.01, &qp).is_err());
    }

    #[test]
    fn recovery_examples() {
        let qp = table();
        assert_eq!(eval_recovery_score(0.0, &qp).unwrap(), 0.0);
        assert!((eval_recovery_score(0.5, &qp).unwrap() - 0.2).abs() < TOL);
        assert!((raw_recovery(1.0, &qp) - 1.0015).abs() < TOL);
        assert_eq!(eval_recovery_score(1.0, &qp).unwrap(), 1.0);
        assert!(eval_recovery_score(1.01, &qp).is_err());
        assert!(eval_recovery_score(-0.01, &qp).is_err());
    }

    #[test]
    fn breakpoints_use_left_segment() {
        let qp = table();
        assert!((eval_delay_score(2.5, &qp).unwrap() - 0.9).abs() < TOL);
        assert!((eval_redundancy_score(0.5, &qp).unwrap() - 0.0).abs() < TOL);
        assert!((eval_recovery_score(0.95, &qp).unwrap() - (0.2 + 1.67 * 0.45)).abs() < TOL);
    }

    #[test]
    fn qoe_examples() {
        let qp = table();
        assert_eq!(eval_qoe(0.0, 0.0, 1.0, &qp).unwrap().q, 1.0);
        // 0.3*0.92 + 0.3*0.5 + 0.4*(1.67*0.425 + 0.2)
        let b = eval_qoe(2.0, 0.25, 0.925, &qp).unwrap();
        assert!((b.q_xi - 0.90975).abs() < TOL);
        assert!((b.q - 0.7899).abs() < TOL);
        let z = eval_qoe(11.0, 0.6, 0.0, &qp).unwrap();
        assert_eq!((z.q_d, z.q_r, z.q_xi, z.q), (0.0, 0.0, 0.0, 0.0));
        assert!(eval_qoe(1.0, 0.0, 2.0, &qp).is_err());
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(table().validate().is_ok());
        let mut qp = table();
        qp.h_d = 0.5;
        qp.h_r = 0.5;
        qp.h_xi = 0.5;
        let err = qp.validate().unwrap_err().to_string();
        assert!(err.contains("sum to 1"), "{err}");

        let mut qp = table();
        qp.k_d2 = 0.0;
        assert!(qp.validate().is_err());
        let mut qp = table();
        qp.d2 = qp.d3;
        assert!(qp.validate().is_err());
        let mut qp = table();
        qp.xi2 = 1.0;
        assert!(qp.validate().is_err());
    }

    #[test]
    fn continuity_at_breakpoints() {
        let qp = table();
        let eps = 1e-6;
        let delay = |x: f64| eval_delay_score(x, &qp).unwrap();
        let red = |x: f64| eval_redundancy_score(x, &qp).unwrap();
        let rec = |x: f64| eval_recovery_score(x, &qp).unwrap();
        for (b, k) in [(qp.d1, qp.k_d2), (qp.d2, qp.k_d3)] {
            assert!((delay(b - eps) - delay(b + eps)).abs() <= k.max(qp.k_d1) * 2.0 * eps + TOL);
        }
        for (b, k) in [(qp.xi1, qp.k_xi2), (qp.xi2, qp.k_xi2)] {
            assert!((rec(b - eps) - rec(b + eps)).abs() <= k * 2.0 * eps + TOL);
        }
        // Cutoffs: left limits must be non-negative after clamping.
        assert!(delay(qp.d3 - eps) >= 0.0);
        assert!(red(qp.r1 - eps) >= 0.0);
    }

    #[test]
    fn monotone_and_bounded_on_fine_grid() {
        let qp = table();
        let mut prev = f64::INFINITY;
        for i in 0..=40_000 {
            let v = eval_delay_score(i as f64 * 1e-3, &qp).unwrap();
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=1_000 {
            let v = eval_redundancy_score(i as f64 * 1e-3, &qp).unwrap();
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            prev = v;
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1_000 {
            let v = eval_recovery_score(i as f64 * 1e-3, &qp).unwrap();
            assert!((0.0..=1.0).contains(&v) && v >= prev);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn weighted_sum_identity(d in 0.0f64..40.0, r in 0.0f64..1.0, xi in 0.0f64..=1.0) {
            let qp = table();
            let b = eval_qoe(d, r, xi, &qp).unwrap();
            let dot = qp.h_d * b.q_d + qp.h_r * b.q_r + qp.h_xi * b.q_xi;
            prop_assert!((b.q - dot).abs() <= 1e-12);
            for v in [b.q_d, b.q_r, b.q_xi, b.q] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
