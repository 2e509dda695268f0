//! Simulated latency: per-tier compute cost plus `size / rate` for every link
//! a task crosses. All times are simulated milliseconds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link from tier `j` to tier `j + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkLink {
    rate: f64,
    jitter: f64,
}

impl NetworkLink {
    /// `rate` in bytes per simulated millisecond; `jitter` is the maximum
    /// relative deviation applied per transfer.
    pub fn new(rate: f64, jitter: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Config(format!("link rate must be positive, got {rate}")));
        }
        if !(0.0..1.0).contains(&jitter) {
            return Err(Error::Config(format!("jitter fraction must be in [0, 1), got {jitter}")));
        }
        Ok(Self { rate, jitter })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

/// Time to push `size_bytes` over `link`. With jitter `e > 0` the base time
/// is scaled by `1 + u`, `u` uniform on `[-e, e]`; the generator is not
/// touched when jitter is zero.
pub fn transmission_latency<R: Rng + ?Sized>(size_bytes: usize, link: &NetworkLink, rng: &mut R) -> f64 {
    let base = size_bytes as f64 / link.rate;
    if link.jitter == 0.0 {
        return base;
    }
    let u = rng.random_range(-link.jitter..=link.jitter);
    base * (1.0 + u)
}

/// Size of a task on the wire: the raw text in a single-byte encoding, one
/// byte per character.
pub fn task_size(text: &str) -> usize {
    text.chars().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub compute: Vec<f64>,
    pub transmission: Vec<f64>,
    pub l_com: f64,
    pub l_tra: f64,
    pub total: f64,
}

/// Compose per-tier compute costs and per-link transfer times. `k` tiers
/// need exactly `k - 1` transfers.
pub fn total_latency(compute: &[f64], transmission: &[f64]) -> Result<LatencyBreakdown> {
    if compute.is_empty() || transmission.len() + 1 != compute.len() {
        return Err(Error::InvalidInput(format!(
            "{} tiers cannot use {} links",
            compute.len(),
            transmission.len()
        )));
    }
    if compute.iter().chain(transmission).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput("latencies must be finite and non-negative".into()));
    }
    let l_com: f64 = compute.iter().sum();
    let l_tra: f64 = transmission.iter().sum();
    Ok(LatencyBreakdown {
        compute: compute.to_vec(),
        transmission: transmission.to_vec(),
        l_com,
        l_tra,
        total: l_com + l_tra,
    })
}
