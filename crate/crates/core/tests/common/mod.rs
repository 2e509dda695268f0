#![allow(dead_code)]

use collab_infer::backends::{BackendKind, CostModel, SyntheticBackend, SyntheticParams, Tier, TierProfile};
use collab_infer::decision::{CalibrationParams, EarlyExitParams, OffloadParams};
use collab_infer::encoder::TokenizationMode;
use collab_infer::harness::{workload, ExperimentConfig, WorkloadSpec};
use collab_infer::netsim::NetworkLink;
use collab_infer::orchestrator::{Hop, Task, TierChain};
use collab_infer::pruning::PruneParams;
use collab_infer::rng::Purpose;

pub fn cost(per_layer: f64) -> CostModel {
    CostModel { base_ms: 1.0, per_token_ms: 0.25, per_token_sq_ms: 0.0, per_layer_ms: per_layer }
}

pub fn synthetic_tier(index: usize, accuracy: f64, depth: usize, seed: u64, params: SyntheticParams) -> Tier {
    let profile = TierProfile {
        index,
        name: format!("tier{index}"),
        kind: BackendKind::Synthetic,
        accuracy,
        cost: cost(index as f64 * 2.0),
        depth,
        tokenization: if index.is_multiple_of(2) { TokenizationMode::Subword } else { TokenizationMode::Word },
        vocab_size: 1024,
        calibration: CalibrationParams::default(),
    };
    let backend = SyntheticBackend::new(index, accuracy, depth, 2, seed, params).unwrap();
    Tier { profile, backend: Box::new(backend) }
}

pub fn hop(rate: f64) -> Hop {
    Hop { link: NetworkLink::new(rate, 0.0).unwrap(), prune: PruneParams::new(0.8).unwrap() }
}

/// A chain of synthetic tiers with the given accuracies and depths.
pub fn chain(specs: &[(f64, usize)], params: SyntheticParams, threshold: f64, seed: u64, exit: Option<EarlyExitParams>) -> TierChain {
    let tiers = specs
        .iter()
        .enumerate()
        .map(|(i, &(a, d))| synthetic_tier(i + 1, a, d, seed, params))
        .collect();
    let hops = (1..specs.len()).map(|_| hop(8.0)).collect();
    TierChain::new(tiers, hops, OffloadParams::new(threshold, 10.0, seed).unwrap(), exit).unwrap()
}

pub fn tasks(seed: u64, n: usize) -> Vec<Task> {
    workload::generate(seed, 0..n as u64, 6, 16, Purpose::Workload, 0)
}

/// The default config shrunk to `tasks` tasks.
pub fn small_config(tasks: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default_config();
    c.workload = WorkloadSpec::Synthetic { tasks, min_words: 8, max_words: 20 };
    c
}
