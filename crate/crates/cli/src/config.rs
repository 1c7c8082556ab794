//! Experiment configuration.
//!
//! The file is sectioned key-value text (TOML syntax) with the sections
//! `[qoe]`, `[system]`, `[network]`, `[sweep]` and `[baselines]`. Every key is
//! optional; anything missing takes its built-in default and the fallback is
//! logged. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use bdharq_core::{NetworkState, QoeParams, SystemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Loss rates swept by `sweep-fig3`, `sweep-qoe` and `validate`.
    pub p_values: Vec<f64>,
    /// Redundancies swept by `sweep-fig2` (x-axis) and `sweep-fig3` (curves).
    pub r_values: Vec<f64>,
    /// Delay curves drawn by `sweep-fig2`.
    pub d_values: Vec<f64>,
    /// Fixed delay for `sweep-fig3`.
    pub fig3_d: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            p_values: (1..=9).map(|i| f64::from(i) * 0.05).map(round12).collect(),
            r_values: (0..=8).map(|k| f64::from(k) / 16.0).collect(),
            d_values: vec![1.0, 2.0, 3.0],
            fig3_d: 2.0,
            trials: 100_000,
            seed: 42,
        }
    }
}

// 0.15000000000000002 -> 0.15
fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Fixed parameters of the comparison planners. Neither value is given for
/// the published baselines; these are reconstruction choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub fixed_d: f64,
    pub fixed_r: f64,
}

impl Default for Baselines {
    fn default() -> Self {
        Self { fixed_d: 2.0, fixed_r: 0.25 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub qoe: QoeParams,
    pub system: SystemParams,
    pub network: NetworkState,
    pub sweep: SweepSpec,
    pub baselines: Baselines,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let given: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("parse error: {e}")))?;
        let defaults = Table::try_from(ExperimentConfig::default())
            .expect("default config serializes to a table");
        let merged = merge(&defaults, &given)?;
        let cfg: ExperimentConfig = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let at = |section: &'static str| {
            move |e: bdharq_core::Error| CliError::Config(format!("{section}: {e}"))
        };
        self.qoe.validate().map_err(at("qoe"))?;
        self.system.validate().map_err(at("system"))?;
        self.network.validate().map_err(at("network"))?;
        let b = &self.baselines;
        if !(0.0..=self.system.d_max).contains(&b.fixed_d) {
            return Err(CliError::Config(format!(
                "baselines.fixed_d: {} outside [0, d_max={}]",
                b.fixed_d, self.system.d_max
            )));
        }
        if !(0.0..=self.system.r_max).contains(&b.fixed_r) || self.system.fec_packets(b.fixed_r).is_none() {
            return Err(CliError::Config(format!(
                "baselines.fixed_r: {} must lie in [0, r_max={}] with m*r integral",
                b.fixed_r, self.system.r_max
            )));
        }
        let s = &self.sweep;
        if s.p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(CliError::Config("sweep.p_values: every p must lie in [0,1]".into()));
        }
        for (name, list) in [("r_values", &s.r_values), ("d_values", &s.d_values)] {
            if list.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(CliError::Config(format!("sweep.{name}: values must be >= 0")));
            }
        }
        if !(s.fig3_d.is_finite() && s.fig3_d >= 0.0) {
            return Err(CliError::Config("sweep.fig3_d: must be >= 0".into()));
        }
        Ok(())
    }

    /// Short SHA-256 digest of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&text)
}

fn merge(defaults: &Table, given: &Table) -> Result<Table, CliError> {
    if let Some(unknown) = given.keys().find(|k| !defaults.contains_key(*k)) {
        return Err(CliError::Config(format!("unknown section [{unknown}]")));
    }
    let mut out = Table::new();
    for (section, default_val) in defaults {
        let default_tbl = default_val.as_table().expect("default sections are tables");
        let given_tbl = match given.get(section) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(CliError::Config(format!("{section}: expected a [{section}] section"))),
        };
        if let Some(t) = given_tbl {
            if let Some(k) = t.keys().find(|k| !default_tbl.contains_key(*k)) {
                return Err(CliError::Config(format!("{section}.{k}: unknown key")));
            }
        }
        let mut sec = Table::new();
        for (key, dv) in default_tbl {
            let path = format!("{section}.{key}");
            let value = match given_tbl.and_then(|t| t.get(key)) {
                Some(v) => coerce(&path, dv, v)?,
                None => {
                    log::info!("{path} not set, using default {dv}");
                    dv.clone()
                }
            };
            sec.insert(key.clone(), value);
        }
        out.insert(section.clone(), Value::Table(sec));
    }
    Ok(out)
}

/// Accepts integers where floats are expected; otherwise types must match.
fn coerce(path: &str, default: &Value, given: &Value) -> Result<Value, CliError> {
    match (default, given) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(*i as f64)),
        (Value::Array(d), Value::Array(items)) => {
            let elem = d.first().cloned().unwrap_or(Value::Float(0.0));
            items
                .iter()
                .map(|v| coerce(path, &elem, v))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Array)
        }
        (d, g) if d.same_type(g) => Ok(g.clone()),
        (d, g) => Err(CliError::Config(format!(
            "{path}: expected {}, found {}",
            d.type_str(),
            g.type_str()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.qoe.h_xi, 0.4);
        assert_eq!(cfg.system.m, 16);
        assert_eq!(cfg.sweep.p_values, vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]);
    }

    #[test]
    fn weight_sum_violation_is_reported() {
        let err = ExperimentConfig::from_toml_str("[qoe]\nh_d = 0.5\nh_r = 0.5\nh_xi = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("qoe") && msg.contains("sum to 1"), "{msg}");
    }

    #[test]
    fn overrides_are_used_verbatim() {
        let cfg = ExperimentConfig::from_toml_str(
            "[sweep]\np_values = [0.05, 0.15, 0.45]\ntrials = 500\n[network]\nt_l = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.sweep.p_values, vec![0.05, 0.15, 0.45]);
        assert_eq!(cfg.sweep.trials, 500);
        assert_eq!(cfg.network.t_l, 2.0);
        assert_eq!(cfg.network.p, 0.35);
    }

    #[test]
    fn bad_keys_and_types_name_the_field() {
        let err = ExperimentConfig::from_toml_str("[system]\nmm = 3\n").unwrap_err().to_string();
        assert!(err.contains("system.mm"), "{err}");
        let err = ExperimentConfig::from_toml_str("[system]\nm = \"x\"\n").unwrap_err().to_string();
        assert!(err.contains("system.m"), "{err}");
        let err = ExperimentConfig::from_toml_str("[extra]\n").unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
        let err = ExperimentConfig::from_toml_str("[baselines]\nfixed_r = 0.3\n").unwrap_err().to_string();
        assert!(err.contains("baselines.fixed_r"), "{err}");
        assert!(ExperimentConfig::from_toml_str("not = [valid").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.sweep.seed = 7;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub p: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
}

impl Overrides {
    /// `p` replaces both the network loss rate and the swept loss rates.
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(p) = self.p {
            cfg.network.p = p;
            cfg.sweep.p_values = vec![p];
        }
        if let Some(seed) = self.seed {
            cfg.sweep.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.sweep.trials = trials;
        }
        cfg.network
            .validate()
            .map_err(|e| CliError::Usage(format!("--p: {e}")))
    }
}
