//! Channel, system and plan records shared by every module.
//!
//! All time quantities are expressed in units of 100 ms.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance used when checking that `m * r` is a whole packet count and
/// when snapping grid endpoints.
pub const INTEGRAL_TOL: f64 = 1e-9;

/// Observed channel condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    /// Independent packet loss probability.
    pub p: f64,
    /// Link round-trip time.
    pub t_l: f64,
}

impl NetworkState {
    pub fn new(p: f64, t_l: f64) -> Result<Self> {
        let net = Self { p, t_l };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(domain(format!("loss rate p={} outside [0,1]", self.p)));
        }
        if !(self.t_l.is_finite() && self.t_l > 0.0) {
            return Err(domain(format!("round-trip time t_l={} must be > 0", self.t_l)));
        }
        Ok(())
    }
}

impl Default for NetworkState {
    fn default() -> Self {
        Self { p: 0.35, t_l: 1.0 }
    }
}

/// Preset transmission constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Data packets per group.
    pub m: u32,
    /// Packet size in bytes.
    pub packet_bytes: f64,
    /// Bitrate in kilobits per second.
    pub bitrate_kbps: f64,
    pub r_max: f64,
    /// Maximum buffer delay, in multiples of `t_l`.
    pub d_max: f64,
    pub r_step: f64,
    /// Delay grid step, in multiples of `t_l`.
    pub d_step: f64,
}

impl SystemParams {
    /// Data-packet spacing `L/B` in units of 100 ms.
    pub fn packet_interval(&self) -> f64 {
        // bytes * 8 / (kbit/s * 1000) seconds, times 10 for 100 ms units
        self.packet_bytes * 8.0 / (self.bitrate_kbps * 1000.0) * 10.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(domain("m must be at least 1"));
        }
        for (name, v) in [("L", self.packet_bytes), ("B", self.bitrate_kbps)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name}={v} must be > 0")));
            }
        }
        for (name, v) in [("r_max", self.r_max), ("d_max", self.d_max)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("{name}={v} must be >= 0")));
            }
        }
        for (name, v) in [("r_step", self.r_step), ("d_step", self.d_step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name}={v} must be > 0")));
            }
        }
        Ok(())
    }

    /// Number of FEC packets for redundancy `r`, if `m * r` is integral.
    pub fn fec_packets(&self, r: f64) -> Option<u32> {
        let count = f64::from(self.m) * r;
        let rounded = count.round();
        if r >= 0.0 && (count - rounded).abs() <= INTEGRAL_TOL {
            Some(rounded as u32)
        } else {
            None
        }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            m: 16,
            packet_bytes: 1000.0,
            bitrate_kbps: 1000.0,
            r_max: 0.5,
            d_max: 10.0,
            r_step: 1.0 / 16.0,
            d_step: 0.5,
        }
    }
}

/// A candidate `(r, d)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    /// FEC redundancy ratio.
    pub r: f64,
    /// Buffer delay in multiples of `t_l`.
    pub d: f64,
}

impl TransmissionPlan {
    pub fn new(r: f64, d: f64) -> Self {
        Self { r, d }
    }

    /// Checks the plan against the system bounds and returns the FEC packet count.
    pub fn validate(&self, sys: &SystemParams) -> Result<u32> {
        if !(self.r.is_finite() && self.r >= 0.0 && self.r <= sys.r_max + INTEGRAL_TOL) {
            return Err(domain(format!(
                "redundancy r={} outside [0, r_max={}]",
                self.r, sys.r_max
            )));
        }
        if !(self.d.is_finite() && self.d >= 0.0 && self.d <= sys.d_max + INTEGRAL_TOL) {
            return Err(domain(format!(
                "buffer delay d={} outside [0, d_max={}]",
                self.d, sys.d_max
            )));
        }
        sys.fec_packets(self.r).ok_or_else(|| {
            Error::Domain(format!(
                "m*r = {}*{} = {} is not a whole number of FEC packets",
                sys.m,
                self.r,
                f64::from(sys.m) * self.r
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults_packet_interval() {
        let sys = SystemParams::default();
        assert!((sys.packet_interval() - 0.08).abs() < 1e-15);
    }

    #[test]
    fn fec_count_requires_integral() {
        let sys = SystemParams::default();
        assert_eq!(sys.fec_packets(0.25), Some(4));
        assert_eq!(sys.fec_packets(0.0), Some(0));
        assert_eq!(sys.fec_packets(0.3), None);
    }

    #[test]
    fn plan_bounds() {
        let sys = SystemParams::default();
        assert_eq!(TransmissionPlan::new(0.5, 10.0).validate(&sys), Ok(8));
        assert!(TransmissionPlan::new(0.7, 0.0).validate(&sys).is_err());
        assert!(TransmissionPlan::new(0.0, -0.5).validate(&sys).is_err());
        assert!(TransmissionPlan::new(0.0, 10.5).validate(&sys).is_err());
    }

    #[test]
    fn network_bounds() {
        assert!(NetworkState::new(1.2, 1.0).is_err());
        assert!(NetworkState::new(0.2, 0.0).is_err());
        assert!(NetworkState::new(0.0, 1.0).is_ok());
    }
}
