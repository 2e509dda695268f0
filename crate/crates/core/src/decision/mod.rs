//! Stateless numeric kernels behind every per-tier decision: softmax
//! confidence with temperature scaling, the offloading probability curve,
//! weighted ensembling, the patience-based early-exit controller and
//! temperature calibration.
//!
//! Everything here is a pure function of its inputs. Randomness, where it is
//! needed at all ([`decide_offload`]), comes in through an explicit generator.

mod calibration;
mod early_exit;
mod ensemble;
mod offload;

pub use calibration::{calibrate_temperature, mean_nll, DEFAULT_TEMPERATURE_GRID};
pub use early_exit::{early_exit_step, exit_layer, layer_diff, EarlyExitParams, EarlyExitState};
pub use ensemble::{ensemble, profile_weights, EnsembleSpec};
pub use offload::{decide_offload, norm_confidence, offload_probability, OffloadParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit-sum invariant of probability vectors and weights.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Raw, unnormalized class scores. At least two classes, all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "logit vector needs at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("logit {i} is not finite ({})", values[i])));
        }
        Ok(Self(values))
    }

    /// Natural-log view of a probability vector, so that
    /// `softmax(from_probabilities(p)) == p` up to rounding. Zero entries are
    /// clamped to the smallest positive normal before taking the log.
    pub fn from_probabilities(probs: &ProbabilityVector) -> Self {
        Self(probs.0.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for LogitVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<LogitVector> for Vec<f64> {
    fn from(v: LogitVector) -> Self {
        v.0
    }
}

/// A discrete distribution over classes: non-negative, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "probability {i} is not a finite non-negative number ({})",
                values[i]
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(values))
    }

    /// The uniform distribution over `classes` entries.
    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0 / classes as f64; classes])
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!((values.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(v: ProbabilityVector) -> Self {
        v.0
    }
}

/// Temperature used to soften (T > 1) or sharpen (T < 1) logits before
/// taking the confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    temperature: f64,
}

impl CalibrationParams {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        Ok(Self { temperature })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self { temperature: 1.0 }
    }
}

/// Numerically stable softmax (max-subtraction).
pub fn softmax(logits: &LogitVector) -> ProbabilityVector {
    ProbabilityVector::from_raw(softmax_slice(logits.as_slice()))
}

pub(crate) fn softmax_slice(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Max entry of `softmax(logits / T)`.
pub fn confidence(logits: &LogitVector, cal: CalibrationParams) -> f64 {
    let t = cal.temperature();
    let scaled: Vec<f64> = logits.as_slice().iter().map(|z| z / t).collect();
    softmax_slice(&scaled).into_iter().fold(f64::NEG_INFINITY, f64::max)
}
