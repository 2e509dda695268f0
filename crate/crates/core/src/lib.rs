//! Multi-tier collaborative inference.
//!
//! A task enters the smallest model at the end device. After each tier the
//! engine measures temperature-scaled confidence, draws a seeded offloading
//! decision, prunes low-attention words and ships the shortened text one tier
//! up. The outputs of every tier that ran are combined with accuracy-derived
//! weights, and each model may stop early once its per-layer predictions
//! settle. Latency is simulated: compute cost per tier plus transmission time
//! per link.
//!
//! | module | what it holds |
//! |---|---|
//! | [`decision`] | softmax confidence, offload curve, ensemble, early exit, calibration |
//! | [`pruning`] | attention importance, pruning masks, cross-tokenizer alignment |
//! | [`encoder`] | toy transformer encoder with per-layer heads |
//! | [`backends`] | toy / synthetic / trace-replay model backends |
//! | [`netsim`] | compute + transmission latency model |
//! | [`orchestrator`] | the tier-by-tier workflow and workload metrics |
//! | [`harness`] | config files, parameter sweeps, traces, reports |
//!
//! The `examples/` directory has one runnable program per capability.

pub mod backends;
pub mod decision;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod netsim;
pub mod orchestrator;
pub mod pruning;
pub mod rng;

pub use error::{Error, Result};
