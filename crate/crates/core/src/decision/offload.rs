use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confidence threshold `t`, curve steepness `k` and the seed the per-task
/// offload streams derive from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadParams {
    threshold: f64,
    scale: f64,
    rng_seed: u64,
}

impl OffloadParams {
    pub fn new(threshold: f64, scale: f64, rng_seed: u64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "offload threshold must lie in (0, 1), got {threshold}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "offload scale must be positive, got {scale}"
            )));
        }
        Ok(Self { threshold, scale, rng_seed })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }
}

/// Position of `conf` inside `(t, 1]`, recentred to `(-1/2, 1/2]`.
pub fn norm_confidence(conf: f64, t: f64) -> Result<f64> {
    if !(conf > t && conf <= 1.0) {
        return Err(Error::Precondition(format!(
            "norm_confidence needs t < conf <= 1, got conf={conf}, t={t}"
        )));
    }
    Ok((conf - t) / (1.0 - t) - 0.5)
}

/// Probability of sending a task one tier up.
///
/// At or below the threshold the task is always offloaded. Above it the
/// probability falls along a logistic curve from `1/(1+e^{-k/2})` just past
/// `t` to `1/(1+e^{k/2})` at full confidence.
pub fn offload_probability(conf: f64, params: &OffloadParams) -> Result<f64> {
    if !(conf > 0.0 && conf <= 1.0) {
        return Err(Error::InvalidInput(format!("confidence must lie in (0, 1], got {conf}")));
    }
    if conf <= params.threshold {
        return Ok(1.0);
    }
    let norm = norm_confidence(conf, params.threshold)?;
    Ok(1.0 / (1.0 + (params.scale * norm).exp()))
}

/// One Bernoulli draw with parameter `prob`.
pub fn decide_offload<R: Rng + ?Sized>(prob: f64, rng: &mut R) -> bool {
    debug_assert!((0.0..=1.0).contains(&prob));
    rng.random::<f64>() < prob
}
