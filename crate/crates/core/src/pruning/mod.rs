//! Attention-driven token pruning.
//!
//! Importance of a token is the total attention it receives, summed over
//! every layer, head and query row. Tokens whose importance does not exceed
//! `alpha` times the sentence mean are dropped before the task moves up a
//! tier. Because neighbouring tiers may split words differently, masks are
//! carried across tokenizers at word granularity and the next tier only ever
//! sees raw text.

mod align;

pub use align::{align_mask, prune_text, word_importance, word_mask, Segmentation};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default pruning coefficient.
pub const DEFAULT_ALPHA: f64 = 0.8;

/// Row-sum tolerance for attention matrices.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Per-token importance plus its arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    values: Vec<f64>,
    ave: f64,
}

impl ImportanceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty importance vector".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("importance must be finite and non-negative".into()));
        }
        let ave = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self { values, ave })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ave(&self) -> f64 {
        self.ave
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneParams {
    alpha: f64,
}

impl PruneParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for PruneParams {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA }
    }
}

/// Keep flag per token (`true` = retain).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneMask(Vec<bool>);

impl PruneMask {
    pub fn new(keep: Vec<bool>) -> Self {
        Self(keep)
    }

    pub fn all(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kept(&self) -> usize {
        self.0.iter().filter(|k| **k).count()
    }
}

/// Sum the attention each token receives across layers, heads and rows.
///
/// `attention[layer][head]` must be an `n x n` row-stochastic matrix.
pub fn accumulate_importance(attention: &[Vec<Array2<f64>>]) -> Result<ImportanceVector> {
    let n = attention
        .iter()
        .flatten()
        .next()
        .map(|m| m.nrows())
        .ok_or_else(|| Error::InvalidInput("no attention maps".into()))?;
    let mut importance = vec![0.0; n];
    for (l, heads) in attention.iter().enumerate() {
        for (h, map) in heads.iter().enumerate() {
            if map.dim() != (n, n) {
                return Err(Error::InvalidInput(format!(
                    "attention map (layer {l}, head {h}) is {:?}, expected ({n}, {n})",
                    map.dim()
                )));
            }
            for (r, row) in map.rows().into_iter().enumerate() {
                let sum: f64 = row.sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE || row.iter().any(|v| *v < 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "attention row {r} (layer {l}, head {h}) is not a distribution (sum {sum})"
                    )));
                }
                for (acc, w) in importance.iter_mut().zip(row) {
                    *acc += w;
                }
            }
        }
    }
    ImportanceVector::new(importance)
}

/// Keep tokens with `imp > alpha * ave`.
///
/// Special tokens are always kept. If the rule would drop every ordinary
/// token, the most important one (lowest index on ties) is kept instead.
pub fn prune_mask(importance: &ImportanceVector, params: &PruneParams, special: &[bool]) -> PruneMask {
    debug_assert_eq!(importance.len(), special.len());
    let cut = params.alpha * importance.ave;
    let mut keep: Vec<bool> = importance
        .values
        .iter()
        .zip(special)
        .map(|(imp, sp)| *sp || *imp > cut)
        .collect();
    let kept_ordinary = keep.iter().zip(special).any(|(k, sp)| *k && !sp);
    if !kept_ordinary {
        let mut best: Option<usize> = None;
        for (i, imp) in importance.values.iter().enumerate() {
            if special[i] {
                continue;
            }
            if best.is_none_or(|b| *imp > importance.values[b]) {
                best = Some(i);
            }
        }
        if let Some(i) = best {
            keep[i] = true;
        }
    }
    PruneMask(keep)
}
