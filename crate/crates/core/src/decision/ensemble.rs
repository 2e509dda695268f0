use serde::{Deserialize, Serialize};

use super::{ProbabilityVector, SUM_TOLERANCE};
use crate::error::{Error, Result};

/// Non-negative per-model weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    weights: Vec<f64>,
}

impl EnsembleSpec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpec("no ensemble weights".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidSpec(format!("weight {i} is negative or non-finite")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidSpec(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights of the models at `indices`, rescaled to sum to one.
    pub fn restricted_to(&self, indices: &[usize]) -> Result<Self> {
        let picked: Vec<f64> = indices
            .iter()
            .map(|&i| {
                self.weights
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("no ensemble weight for model {i}")))
            })
            .collect::<Result<_>>()?;
        let total: f64 = picked.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidSpec("selected models carry zero total weight".into()));
        }
        Self::new(picked.into_iter().map(|w| w / total).collect())
    }
}

/// Weight-averaged probability vector `sum_i w_i * probs_i`.
pub fn ensemble(probs: &[ProbabilityVector], spec: &EnsembleSpec) -> Result<ProbabilityVector> {
    if probs.len() != spec.len() {
        return Err(Error::InvalidInput(format!(
            "{} probability vectors for {} weights",
            probs.len(),
            spec.len()
        )));
    }
    let classes = probs[0].len();
    if probs.iter().any(|p| p.len() != classes) {
        return Err(Error::InvalidInput("probability vectors differ in length".into()));
    }
    let mut out = vec![0.0; classes];
    for (p, w) in probs.iter().zip(spec.weights()) {
        for (acc, v) in out.iter_mut().zip(p.as_slice()) {
            *acc += w * v;
        }
    }
    ProbabilityVector::new(out)
}

/// Ensemble weights proportional to pre-profiled accuracies.
pub fn profile_weights(accuracies: &[f64]) -> Result<EnsembleSpec> {
    if accuracies.is_empty() {
        return Err(Error::InvalidInput("no accuracies to weight".into()));
    }
    if let Some(i) = accuracies.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "accuracy {i} must be positive, got {}",
            accuracies[i]
        )));
    }
    let total: f64 = accuracies.iter().sum();
    EnsembleSpec::new(accuracies.iter().map(|a| a / total).collect())
}
