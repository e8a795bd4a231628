//! Experiment configuration: one JSON document, unknown keys rejected.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use imrc_core::dofest::validate_grid;
use imrc_core::{
    generate_channels, paper_example_channels, ChannelRealization, Combining, GainMode, NetworkConfig, PowerPolicy,
    Scheme,
};
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable that replaces `network.seed`.
pub const SEED_ENV: &str = "IMRC_SEED";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub schemes: Vec<SchemeSpec>,
    #[serde(default = "default_grid")]
    pub grid_db: Vec<f64>,
    #[serde(default = "default_window")]
    pub window_db: (f64, f64),
    /// 0 selects the fixed example network (or `channels_file`).
    #[serde(default)]
    pub trials: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub long_format: bool,
    /// Channel realization document to use instead of the example network.
    #[serde(default)]
    pub channels_file: Option<PathBuf>,
}

/// 0, 5, …, 100 dB.
pub fn default_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 5.0).collect()
}

pub fn default_window() -> (f64, f64) {
    (60.0, 100.0)
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn unit_exponent() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    TwoHop {
        #[serde(default = "unit_exponent")]
        relay_exponent: f64,
        #[serde(default)]
        label: Option<String>,
    },
    BlockMarkov {
        policy: PowerPolicy,
        #[serde(default)]
        alpha: u8,
        #[serde(default)]
        gain_mode: GainMode,
        #[serde(default)]
        label: Option<String>,
    },
    NoRelayTdm {
        #[serde(default)]
        label: Option<String>,
    },
    NoRelayTin {
        #[serde(default)]
        label: Option<String>,
    },
    CoopBc {
        #[serde(default)]
        label: Option<String>,
    },
    HalfDuplex {
        #[serde(default = "unit_exponent")]
        relay_exponent: f64,
        #[serde(default)]
        label: Option<String>,
    },
}

/// A scheme ready to run, with the name it carries in artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScheme {
    pub label: String,
    pub scheme: Scheme,
}

impl LabeledScheme {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            label: scheme.default_label(),
            scheme,
        }
    }
}

fn check_exponent(e: f64) -> Result<f64, CliError> {
    if e.is_finite() {
        Ok(e)
    } else {
        Err(CliError::Config(format!("relay_exponent must be finite, got {e}")))
    }
}

impl SchemeSpec {
    pub fn resolve(&self) -> Result<LabeledScheme, CliError> {
        let (scheme, label) = match self {
            SchemeSpec::TwoHop { relay_exponent, label } => (
                Scheme::TwoHop {
                    relay_exponent: check_exponent(*relay_exponent)?,
                },
                label,
            ),
            SchemeSpec::BlockMarkov {
                policy,
                alpha,
                gain_mode,
                label,
            } => {
                let combining = Combining::from_alpha(*alpha)
                    .ok_or_else(|| CliError::Config(format!("alpha must be 0 or 1, got {alpha}")))?;
                if let PowerPolicy::Custom {
                    chi_exponent,
                    psi_exponent,
                    relay_exponent,
                } = policy
                {
                    for e in [chi_exponent, psi_exponent, relay_exponent] {
                        check_exponent(*e)?;
                    }
                }
                (
                    Scheme::BlockMarkov {
                        policy: *policy,
                        combining,
                        gain_mode: *gain_mode,
                    },
                    label,
                )
            }
            SchemeSpec::NoRelayTdm { label } => (Scheme::NoRelayTdm, label),
            SchemeSpec::NoRelayTin { label } => (Scheme::NoRelayTin, label),
            SchemeSpec::CoopBc { label } => (Scheme::CoopBc, label),
            SchemeSpec::HalfDuplex { relay_exponent, label } => (
                Scheme::HalfDuplex {
                    relay_exponent: check_exponent(*relay_exponent)?,
                },
                label,
            ),
        };
        let label = label.clone().unwrap_or_else(|| scheme.default_label());
        if label.is_empty() || label.contains(['"', '\n', '\r']) {
            return Err(CliError::Config(format!(
                "label {label:?} must be nonempty without quotes or newlines"
            )));
        }
        Ok(LabeledScheme { label, scheme })
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Reads the file, applies `IMRC_SEED` if set, and validates.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.network.seed = seed
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={seed:?} is not an unsigned 64-bit integer")))?;
        }
        // relative channel files resolve against the config's directory
        if let (Some(file), Some(dir)) = (cfg.channels_file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked without running a scheme.
    pub fn validate(&self) -> Result<Vec<LabeledScheme>, CliError> {
        self.network.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.schemes.is_empty() {
            return Err(CliError::Config("at least one scheme is required".into()));
        }
        validate_grid(&self.grid_db).map_err(|e| CliError::Config(e.to_string()))?;
        let (lo, hi) = self.window_db;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CliError::Config(format!("window_db must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        let resolved = self.schemes.iter().map(SchemeSpec::resolve).collect::<Result<Vec<_>, _>>()?;
        let mut seen = HashSet::new();
        for s in &resolved {
            if !seen.insert(s.label.as_str()) {
                return Err(CliError::Config(format!("duplicate scheme label {:?}", s.label)));
            }
        }
        if self.trials == 0
            && self.channels_file.is_none()
            && (self.network.users != 2 || self.network.relay_antennas != 2)
        {
            return Err(CliError::Config(
                "trials = 0 uses the two-user example network; set K = M = 2 or give channels_file".into(),
            ));
        }
        Ok(resolved)
    }

    /// The channel a single sweep runs on, with its provenance tag.
    pub fn sweep_channels(&self) -> Result<(ChannelRealization, String), CliError> {
        if let Some(path) = &self.channels_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let ch = ChannelRealization::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?;
            if ch.users() != self.network.users || ch.relay_antennas() != self.network.relay_antennas {
                return Err(CliError::Config(format!(
                    "channels_file has K={}, M={} but network has K={}, M={}",
                    ch.users(),
                    ch.relay_antennas(),
                    self.network.users,
                    self.network.relay_antennas
                )));
            }
            return Ok((ch, format!("file:{}", path.display())));
        }
        if self.trials == 0 {
            Ok((paper_example_channels(), "paper_example".into()))
        } else {
            Ok((
                generate_channels(&self.network, 0),
                format!("seed{}-trial0", self.network.seed),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "network": {"K": 2, "M": 2, "seed": 3},
        "schemes": [{"id": "two_hop"}]
    }"#;

    #[test]
    fn minimal_config_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.network.noise_var, 1.0);
        assert_eq!(cfg.grid_db.len(), 21);
        assert_eq!(cfg.window_db, (60.0, 100.0));
        assert_eq!(cfg.trials, 0);
        let resolved = cfg.validate().unwrap();
        assert_eq!(resolved[0].label, "two_hop");
    }

    #[test]
    fn block_markov_parameters() {
        let cfg = ExperimentConfig::from_json(
            r#"{"network": {"K": 2, "M": 2},
                "schemes": [
                  {"id": "block_markov", "policy": "asymmetric", "alpha": 1, "gain_mode": "realized"},
                  {"id": "block_markov", "policy": {"custom": {"chi_exponent": 0.5, "psi_exponent": 1, "relay_exponent": 2}}}
                ]}"#,
        )
        .unwrap();
        let resolved = cfg.validate().unwrap();
        assert_eq!(resolved[0].label, "block_markov[asym,coherent,realized]");
        assert_eq!(resolved[1].label, "block_markov[custom]");
    }

    #[test]
    fn rejects_unknown_keys() {
        let top = r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "two_hop"}], "grid": [1]}"#;
        assert!(matches!(ExperimentConfig::from_json(top), Err(CliError::Config(_))));
        let scheme = r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "two_hop", "policy": "symmetric"}]}"#;
        assert!(ExperimentConfig::from_json(scheme).is_err());
        let network = r#"{"network": {"K": 2, "M": 2, "N": 1}, "schemes": [{"id": "two_hop"}]}"#;
        assert!(ExperimentConfig::from_json(network).is_err());
        let id = r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "han_kobayashi"}]}"#;
        assert!(ExperimentConfig::from_json(id).is_err());
    }

    #[test]
    fn semantic_validation() {
        let bad = |text: &str| {
            let cfg = ExperimentConfig::from_json(text).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{text}");
        };
        bad(r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "two_hop"}], "grid_db": [0, 10, 5]}"#);
        bad(r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "two_hop"}], "grid_db": []}"#);
        bad(r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "two_hop"}], "window_db": [100, 60]}"#);
        bad(r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "block_markov", "policy": "symmetric", "alpha": 2}]}"#);
        bad(r#"{"network": {"K": 2, "M": 2}, "schemes": [{"id": "coop_bc"}, {"id": "coop_bc"}]}"#);
        bad(r#"{"network": {"K": 3, "M": 3}, "schemes": [{"id": "coop_bc"}]}"#);
        bad(r#"{"network": {"K": 0, "M": 3}, "schemes": [{"id": "coop_bc"}], "trials": 2}"#);
        bad(r#"{"network": {"K": 2, "M": 2}, "schemes": []}"#);
    }

    #[test]
    fn sweep_channel_selection() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let (ch, id) = cfg.sweep_channels().unwrap();
        assert_eq!(id, "paper_example");
        assert_eq!(ch, paper_example_channels());
        let mut random = cfg.clone();
        random.trials = 5;
        let (ch, id) = random.sweep_channels().unwrap();
        assert_eq!(id, "seed3-trial0");
        assert_eq!(ch, generate_channels(&random.network, 0));
    }
}
