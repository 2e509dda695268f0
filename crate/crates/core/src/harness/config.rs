//! Experiment configuration (TOML).
//!
//! ```toml
//! version = 1
//! seed = 7
//! scale = 10.0            # k of the offload S-curve
//! patience = 2            # early-exit p
//! accuracy_target = 0.9   # optional
//! taus = [0.0, 0.01, 0.0001, 0.00001]
//! thresholds = [0.7, 0.8, 0.9]
//!
//! [workload]
//! source = "synthetic"    # or: source = "trace", path = "traces.jsonl"
//! tasks = 1000
//!
//! [[tiers]]
//! name = "device"
//! backend = "synthetic"   # synthetic | toy | trace
//! accuracy = 0.8
//! depth = 6
//! [tiers.cost]
//! base_ms = 2.0
//! per_token_ms = 0.1
//! per_layer_ms = 4.0
//!
//! [[links]]               # one per adjacent tier pair
//! rate = 20.0             # bytes per simulated ms
//! alpha = 0.8
//! ```
//!
//! Unknown keys are rejected. Relative trace paths resolve against the
//! directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::{BackendKind, CostModel, SyntheticParams};
use crate::decision::{EarlyExitParams, OffloadParams};
use crate::encoder::{EncoderConfig, TokenizationMode};
use crate::error::{Error, Result};
use crate::netsim::NetworkLink;
use crate::pruning::{PruneParams, DEFAULT_ALPHA};

pub const CONFIG_VERSION: u32 = 1;

/// The configuration shipped with the crate: the 3-tier synthetic workload.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

fn default_scale() -> f64 {
    10.0
}

fn default_patience() -> u32 {
    2
}

fn default_taus() -> Vec<f64> {
    vec![0.0, 0.01, 0.0001, 0.00001]
}

fn default_thresholds() -> Vec<f64> {
    vec![0.7, 0.8, 0.9]
}

fn default_temperature() -> f64 {
    1.0
}

fn default_vocab() -> u32 {
    1024
}

fn default_min_words() -> usize {
    8
}

fn default_max_words() -> usize {
    20
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_patience")]
    pub patience: u32,
    #[serde(default)]
    pub accuracy_target: Option<f64>,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub synthetic: SyntheticParams,
    pub tiers: Vec<TierConfig>,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum WorkloadSpec {
    /// Generated two-class review snippets.
    Synthetic {
        tasks: usize,
        #[serde(default = "default_min_words")]
        min_words: usize,
        #[serde(default = "default_max_words")]
        max_words: usize,
    },
    /// Tasks and model outputs replayed from a trace file.
    Trace { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierConfig {
    pub name: String,
    pub backend: BackendKind,
    /// Profiled accuracy. Measured on a validation workload when omitted
    /// (toy tiers only).
    #[serde(default)]
    pub accuracy: Option<f64>,
    /// Layer count; toy tiers take it from `toy.layers`.
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub tokenization: TokenizationMode,
    #[serde(default = "default_vocab")]
    pub vocab_size: u32,
    pub cost: CostModel,
    #[serde(default)]
    pub toy: Option<ToyConfig>,
}

/// Toy encoder shape plus head training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub layers: usize,
    #[serde(default = "ToyConfig::default_heads")]
    pub heads: usize,
    #[serde(default = "ToyConfig::default_d_model")]
    pub d_model: usize,
    #[serde(default = "ToyConfig::default_d_ff")]
    pub d_ff: usize,
    #[serde(default = "ToyConfig::default_max_len")]
    pub max_len: usize,
    /// Defaults to the global seed plus the tier index.
    #[serde(default)]
    pub weight_seed: Option<u64>,
    #[serde(default = "ToyConfig::default_train_tasks")]
    pub train_tasks: usize,
    #[serde(default = "ToyConfig::default_lr")]
    pub learning_rate: f64,
    #[serde(default = "ToyConfig::default_epochs")]
    pub epochs: usize,
}

impl ToyConfig {
    fn default_heads() -> usize {
        2
    }
    fn default_d_model() -> usize {
        32
    }
    fn default_d_ff() -> usize {
        64
    }
    fn default_max_len() -> usize {
        64
    }
    fn default_train_tasks() -> usize {
        200
    }
    fn default_lr() -> f64 {
        0.1
    }
    fn default_epochs() -> usize {
        200
    }

    pub fn encoder(&self, vocab_size: u32, classes: usize, weight_seed: u64) -> EncoderConfig {
        EncoderConfig {
            layers: self.layers,
            heads: self.heads,
            d_model: self.d_model,
            d_ff: self.d_ff,
            vocab_size,
            classes,
            max_len: self.max_len,
            weight_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    /// Bytes per simulated millisecond.
    pub rate: f64,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl LinkConfig {
    pub fn link(&self) -> Result<NetworkLink> {
        NetworkLink::new(self.rate, self.jitter)
    }

    pub fn prune(&self) -> Result<PruneParams> {
        PruneParams::new(self.alpha).map_err(|e| Error::Config(e.to_string()))
    }
}

impl ExperimentConfig {
    /// Parse and validate. Parse errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Load from a file; relative trace paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let WorkloadSpec::Trace { path: trace } = &mut config.workload {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(config)
    }

    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled default config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.version != CONFIG_VERSION {
            return fail(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.taus.is_empty() || self.thresholds.is_empty() {
            return fail("taus and thresholds must be non-empty".into());
        }
        for &tau in &self.taus {
            EarlyExitParams::new(tau, self.patience).map_err(|e| Error::Config(e.to_string()))?;
        }
        for &t in &self.thresholds {
            OffloadParams::new(t, self.scale, self.seed).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(g) = self.accuracy_target {
            if !(0.0..=1.0).contains(&g) {
                return fail(format!("accuracy_target must be in [0, 1], got {g}"));
            }
        }
        if let WorkloadSpec::Synthetic { tasks, min_words, max_words } = &self.workload {
            if *tasks == 0 || *min_words == 0 || min_words > max_words {
                return fail("synthetic workload needs tasks >= 1 and 1 <= min_words <= max_words".into());
            }
        }
        if self.tiers.is_empty() {
            return fail("at least one tier is required".into());
        }
        if self.links.len() + 1 != self.tiers.len() {
            return fail(format!("{} tiers need {} links, got {}", self.tiers.len(), self.tiers.len() - 1, self.links.len()));
        }
        let trace_workload = matches!(self.workload, WorkloadSpec::Trace { .. });
        for (i, tier) in self.tiers.iter().enumerate() {
            let at = |msg: &str| Error::Config(format!("tier {} ({}): {msg}", i + 1, tier.name));
            if !(tier.temperature > 0.0 && tier.temperature.is_finite()) {
                return Err(at("temperature must be > 0"));
            }
            tier.cost.validate().map_err(|e| at(&e.to_string()))?;
            match tier.backend {
                BackendKind::Toy => {
                    let toy = tier.toy.as_ref().ok_or_else(|| at("toy backend needs a [tiers.toy] table"))?;
                    if tier.depth.is_some_and(|d| d != toy.layers) {
                        return Err(at("depth disagrees with toy.layers"));
                    }
                }
                BackendKind::Synthetic | BackendKind::Trace => {
                    if tier.toy.is_some() {
                        return Err(at("[tiers.toy] only applies to toy backends"));
                    }
                    if tier.accuracy.is_none() || tier.depth.is_none() {
                        return Err(at("accuracy and depth are required"));
                    }
                }
            }
            if tier.backend == BackendKind::Trace && !trace_workload {
                return Err(at("trace backend requires a trace workload"));
            }
            if let Some(a) = tier.accuracy {
                if !(a > 0.0 && a <= 1.0) {
                    return Err(at("accuracy must be in (0, 1]"));
                }
            }
        }
        for (i, link) in self.links.iter().enumerate() {
            link.link().and(link.prune()).map_err(|e| Error::Config(format!("link {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn depth(&self, tier: usize) -> usize {
        let t = &self.tiers[tier];
        t.depth.or(t.toy.as_ref().map(|toy| toy.layers)).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let c = ExperimentConfig::default_config();
        assert_eq!(c.tiers.len(), 3);
        assert_eq!(c.taus, vec![0.0, 0.01, 0.0001, 0.00001]);
        assert_eq!(c.thresholds, vec![0.7, 0.8, 0.9]);
        let accs: Vec<f64> = c.tiers.iter().map(|t| t.accuracy.unwrap()).collect();
        assert_eq!(accs, vec![0.80, 0.90, 0.96]);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::default_config();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_an_error_with_a_line() {
        let text = DEFAULT_CONFIG.replacen("seed =", "colour = 3\nseed =", 1);
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn version_is_required_and_checked() {
        let without: String = DEFAULT_CONFIG.lines().filter(|l| !l.starts_with("version")).collect::<Vec<_>>().join("\n");
        assert!(ExperimentConfig::from_toml(&without).is_err());
        let wrong = DEFAULT_CONFIG.replacen("version = 1", "version = 2", 1);
        assert!(ExperimentConfig::from_toml(&wrong).is_err());
    }

    #[test]
    fn link_count_must_match() {
        let mut c = ExperimentConfig::default_config();
        c.links.pop();
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        let mut c = ExperimentConfig::default_config();
        c.taus.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default_config();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
