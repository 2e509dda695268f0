//! Model backends.
//!
//! A backend turns one tier's input into per-layer class probabilities and a
//! per-token importance vector. The orchestrator never sees where those come
//! from: a real toy encoder, a seeded synthetic generator, or a replayed
//! trace file. Compute cost is charged here from the tier's cost model and
//! the number of layers that actually ran.

mod synthetic;
mod toy;
mod trace;

use serde::{Deserialize, Serialize};

pub use synthetic::{SyntheticBackend, SyntheticParams};
pub use toy::ToyBackend;
pub use trace::{TraceBackend, TraceHeader, TraceRecord, TraceStore, TRACE_VERSION};

use crate::decision::{exit_layer, CalibrationParams, EarlyExitParams, ProbabilityVector};
use crate::encoder::{TokenizationMode, Tokenized, Tokenizer};
use crate::error::{Error, Result};
use crate::pruning::ImportanceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Toy,
    Trace,
    Synthetic,
}

/// Simulated compute cost: `base + per_token*n + per_token_sq*n^2 + per_layer*layers`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub base_ms: f64,
    pub per_token_ms: f64,
    #[serde(default)]
    pub per_token_sq_ms: f64,
    pub per_layer_ms: f64,
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.base_ms, self.per_token_ms, self.per_token_sq_ms, self.per_layer_ms];
        if all.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Config(format!("cost coefficients must be >= 0: {self:?}")));
        }
        Ok(())
    }

    pub fn cost(&self, tokens: usize, layers: usize) -> f64 {
        let n = tokens as f64;
        self.base_ms + self.per_token_ms * n + self.per_token_sq_ms * n * n + self.per_layer_ms * layers as f64
    }
}

/// Everything the orchestrator knows about one tier's model.
#[derive(Debug, Clone, PartialEq)]
pub struct TierProfile {
    /// 1-based position in the chain.
    pub index: usize,
    pub name: String,
    pub kind: BackendKind,
    /// Pre-profiled accuracy, the basis of the ensemble weights.
    pub accuracy: f64,
    pub cost: CostModel,
    /// Number of encoder layers.
    pub depth: usize,
    pub tokenization: TokenizationMode,
    pub vocab_size: u32,
    pub calibration: CalibrationParams,
}

impl TierProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.accuracy > 0.0 && self.accuracy <= 1.0) {
            return Err(Error::Config(format!(
                "tier {} accuracy must be in (0, 1], got {}",
                self.index, self.accuracy
            )));
        }
        if self.depth == 0 {
            return Err(Error::Config(format!("tier {} has zero depth", self.index)));
        }
        self.cost.validate()
    }

    pub fn tokenizer(&self) -> Result<Tokenizer> {
        Tokenizer::new(self.vocab_size, self.tokenization)
    }
}

/// What a tier receives.
#[derive(Debug, Clone, Copy)]
pub struct TierInput<'a> {
    pub task_id: u64,
    pub label: usize,
    pub text: &'a str,
    pub tokens: &'a Tokenized,
}

/// Inference result before costing.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub layer_probs: Vec<ProbabilityVector>,
    pub importance: ImportanceVector,
    pub result: ProbabilityVector,
    pub executed_layers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutput {
    pub layer_probs: Vec<ProbabilityVector>,
    pub importance: ImportanceVector,
    pub result: ProbabilityVector,
    pub executed_layers: usize,
    /// Simulated compute latency of this tier.
    pub compute_cost: f64,
}

pub trait ModelBackend: Send + Sync {
    /// Run the model, honouring the early-exit controller when given.
    fn infer(&self, input: &TierInput<'_>, exit: Option<&EarlyExitParams>) -> Result<ModelOutput>;

    /// Full-depth record of one input, as stored in trace files.
    fn record(&self, input: &TierInput<'_>, tier: usize) -> Result<TraceRecord>;
}

/// A profiled tier bound to its backend.
pub struct Tier {
    pub profile: TierProfile,
    pub backend: Box<dyn ModelBackend>,
}

impl std::fmt::Debug for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tier").field("profile", &self.profile).finish_non_exhaustive()
    }
}

/// Dispatch to the tier's backend and charge compute cost for the layers
/// that ran.
pub fn backend_infer(tier: &Tier, input: &TierInput<'_>, exit: Option<&EarlyExitParams>) -> Result<BackendOutput> {
    if input.tokens.is_empty() {
        return Err(Error::InvalidInput("no tokens".into()));
    }
    let out = tier.backend.infer(input, exit)?;
    if out.importance.len() != input.tokens.len() {
        return Err(Error::InvalidInput(format!(
            "backend returned {} importance entries for {} tokens",
            out.importance.len(),
            input.tokens.len()
        )));
    }
    let compute_cost = tier.profile.cost.cost(input.tokens.len(), out.executed_layers);
    Ok(BackendOutput {
        layer_probs: out.layer_probs,
        importance: out.importance,
        result: out.result,
        executed_layers: out.executed_layers,
        compute_cost,
    })
}

/// Apply the early-exit controller to a stored full-depth record.
///
/// On exit the exiting layer's vector is the result and only the executed
/// layers are returned; otherwise the record's final output stands. Importance
/// is the stored per-layer importance times the executed layer count.
pub fn replay_record(record: &TraceRecord, exit: Option<&EarlyExitParams>) -> Result<ModelOutput> {
    let exited = match exit {
        Some(params) => exit_layer(&record.layers, params)?,
        None => None,
    };
    let executed = exited.unwrap_or(record.layers.len());
    let result = match exited {
        Some(layer) => record.layers[layer - 1].clone(),
        None => record.result.clone(),
    };
    let importance = ImportanceVector::new(record.importance.clone())?.scaled(executed as f64)?;
    Ok(ModelOutput {
        layer_probs: record.layers[..executed].to_vec(),
        importance,
        result,
        executed_layers: executed,
    })
}
