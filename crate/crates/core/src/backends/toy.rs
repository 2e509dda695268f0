use std::sync::Arc;

use super::{ModelBackend, ModelOutput, TierInput, TraceRecord};
use crate::decision::EarlyExitParams;
use crate::encoder::{forward, ModelWeights};
use crate::error::Result;
use crate::pruning::accumulate_importance;

/// Runs the toy encoder; importance is accumulated over the layers that ran.
#[derive(Debug, Clone)]
pub struct ToyBackend {
    weights: Arc<ModelWeights>,
}

impl ToyBackend {
    pub fn new(weights: Arc<ModelWeights>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }
}

impl ModelBackend for ToyBackend {
    fn infer(&self, input: &TierInput<'_>, exit: Option<&EarlyExitParams>) -> Result<ModelOutput> {
        let out = forward(&input.tokens.ids, &self.weights, exit)?;
        let importance = accumulate_importance(&out.attention)?;
        Ok(ModelOutput {
            layer_probs: out.layer_probs,
            importance,
            result: out.result,
            executed_layers: out.executed_layers,
        })
    }

    /// Stores the mean per-layer importance of a full-depth pass, so a replay
    /// that exits early sees a proportional share rather than the exact
    /// partial sum.
    fn record(&self, input: &TierInput<'_>, tier: usize) -> Result<TraceRecord> {
        let out = forward(&input.tokens.ids, &self.weights, None)?;
        let importance = accumulate_importance(&out.attention)?;
        let layers = out.executed_layers as f64;
        Ok(TraceRecord {
            task_id: input.task_id,
            tier,
            text: input.text.to_string(),
            tokens: input.tokens.ids.clone(),
            label: input.label,
            layers: out.layer_probs,
            importance: importance.values().iter().map(|v| v / layers).collect(),
            result: out.result,
        })
    }
}
