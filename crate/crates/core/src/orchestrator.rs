//! The tier-by-tier workflow.
//!
//! Tier 1 sees the original text. After each tier: confidence of the tier's
//! result under its temperature, offload probability, a seeded Bernoulli
//! draw. On "offload" the text is pruned by that tier's attention importance,
//! charged for transmission at its pruned size, and handed to the next tier.
//! The chain stops at the first "stay" or after the last tier, and the
//! outputs of all tiers that ran are ensembled with their profiled weights
//! renormalized over the executed set.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::{backend_infer, Tier, TierInput};
use crate::decision::{
    confidence, decide_offload, ensemble, offload_probability, profile_weights, EarlyExitParams, EnsembleSpec,
    LogitVector, OffloadParams, ProbabilityVector,
};
use crate::error::{Error, Result};
use crate::netsim::{task_size, total_latency, transmission_latency, LatencyBreakdown, NetworkLink};
use crate::pruning::{align_mask, prune_mask, prune_text, word_importance, word_mask, PruneParams};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: u64,
    pub text: String,
    pub label: usize,
}

/// Link between consecutive tiers plus the pruning applied before crossing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub link: NetworkLink,
    pub prune: PruneParams,
}

/// Tiers, links and the decision parameters of one run.
///
/// Tiers sit behind an `Arc`, so re-parameterizing a chain for another grid
/// cell is cheap and shares the backends.
#[derive(Debug, Clone)]
pub struct TierChain {
    tiers: Arc<Vec<Tier>>,
    hops: Vec<Hop>,
    pub offload: OffloadParams,
    pub early_exit: Option<EarlyExitParams>,
    weights: EnsembleSpec,
}

impl TierChain {
    pub fn new(
        tiers: Vec<Tier>,
        hops: Vec<Hop>,
        offload: OffloadParams,
        early_exit: Option<EarlyExitParams>,
    ) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::Config("a chain needs at least one tier".into()));
        }
        if hops.len() + 1 != tiers.len() {
            return Err(Error::Config(format!("{} tiers need {} links, got {}", tiers.len(), tiers.len() - 1, hops.len())));
        }
        for (i, t) in tiers.iter().enumerate() {
            if t.profile.index != i + 1 {
                return Err(Error::Config(format!("tier at position {} claims index {}", i + 1, t.profile.index)));
            }
            t.profile.validate()?;
        }
        let accuracies: Vec<f64> = tiers.iter().map(|t| t.profile.accuracy).collect();
        let weights = profile_weights(&accuracies)?;
        Ok(Self { tiers: Arc::new(tiers), hops, offload, early_exit, weights })
    }

    pub fn tiers(&self) -> &[Tier] {
        &self.tiers
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    /// Profiled ensemble weights over the whole chain.
    pub fn weights(&self) -> &EnsembleSpec {
        &self.weights
    }

    pub fn with_offload(&self, offload: OffloadParams) -> Self {
        Self { offload, ..self.clone() }
    }

    pub fn with_early_exit(&self, early_exit: Option<EarlyExitParams>) -> Self {
        Self { early_exit, ..self.clone() }
    }
}

/// What happened at one tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierRecord {
    pub tier: usize,
    pub tokens: usize,
    pub depth: usize,
    pub executed_layers: usize,
    pub result: ProbabilityVector,
    pub confidence: f64,
    pub offload_probability: f64,
    /// `None` at the last tier, where offloading is never attempted.
    pub offload: Option<bool>,
    /// Pruned text handed to the next tier.
    pub forwarded_text: Option<String>,
    pub compute_cost: f64,
    pub transmission: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceOutcome {
    pub task_id: u64,
    pub label: usize,
    pub tiers: Vec<TierRecord>,
    pub ensemble_weights: Vec<f64>,
    pub ensemble: ProbabilityVector,
    pub predicted: usize,
    pub correct: bool,
    pub latency: LatencyBreakdown,
}

/// Prune `text` by the importance tier `from` assigned and return the text
/// the next tier receives.
pub fn prune_for_next(
    chain: &TierChain,
    from: usize,
    text: &str,
    source: &crate::encoder::Tokenized,
    importance: &crate::pruning::ImportanceVector,
) -> Result<String> {
    let hop = &chain.hops[from];
    let mask = prune_mask(importance, &hop.prune, source.segmentation.special());
    let target = chain.tiers[from + 1].profile.tokenizer()?.tokenize(text)?;
    let aligned = align_mask(&mask, &source.segmentation, &target.segmentation)?;
    let words = word_mask(&aligned, &target.segmentation)?;
    let word_imp = word_importance(importance, &source.segmentation)?;
    prune_text(&target.segmentation, &words, Some(&word_imp))
}

/// Run one task through the chain.
pub fn run_task(task: &Task, chain: &TierChain) -> Result<InferenceOutcome> {
    let seed = chain.offload.rng_seed();
    let last = chain.tiers.len() - 1;
    let mut text = task.text.clone();
    let mut records: Vec<TierRecord> = Vec::new();
    let mut results = Vec::new();
    let mut compute = Vec::new();
    let mut transmission = Vec::new();

    for (j, tier) in chain.tiers.iter().enumerate() {
        let index = j + 1;
        let step = || -> Result<(TierRecord, ProbabilityVector, Option<String>)> {
            let tokens = tier.profile.tokenizer()?.tokenize(&text)?;
            let input = TierInput { task_id: task.id, label: task.label, text: &text, tokens: &tokens };
            let out = backend_infer(tier, &input, chain.early_exit.as_ref())?;
            let conf = confidence(&LogitVector::from_probabilities(&out.result), tier.profile.calibration);
            let prob = offload_probability(conf, &chain.offload)?;
            let offload = (j < last).then(|| decide_offload(prob, &mut stream(seed, task.id, index, Purpose::Offload)));
            let forwarded = match offload {
                Some(true) => Some(prune_for_next(chain, j, &text, &tokens, &out.importance)?),
                _ => None,
            };
            let record = TierRecord {
                tier: index,
                tokens: tokens.len(),
                depth: tier.profile.depth,
                executed_layers: out.executed_layers,
                result: out.result.clone(),
                confidence: conf,
                offload_probability: prob,
                offload,
                forwarded_text: forwarded.clone(),
                compute_cost: out.compute_cost,
                transmission: None,
            };
            Ok((record, out.result, forwarded))
        };
        let (mut record, result, forwarded) = step().map_err(|e| e.at_tier(index))?;
        compute.push(record.compute_cost);
        results.push(result);
        match forwarded {
            Some(next) => {
                let mut rng = stream(seed, task.id, index, Purpose::Jitter);
                let t = transmission_latency(task_size(&next), &chain.hops[j].link, &mut rng);
                record.transmission = Some(t);
                transmission.push(t);
                records.push(record);
                text = next;
            }
            None => {
                records.push(record);
                break;
            }
        }
    }

    let executed: Vec<usize> = (0..records.len()).collect();
    let weights = chain.weights.restricted_to(&executed)?;
    let combined = ensemble(&results, &weights)?;
    let predicted = combined.argmax();
    Ok(InferenceOutcome {
        task_id: task.id,
        label: task.label,
        tiers: records,
        ensemble_weights: weights.weights().to_vec(),
        ensemble: combined,
        predicted,
        correct: predicted == task.label,
        latency: total_latency(&compute, &transmission)?,
    })
}

/// Aggregate view of a workload run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadMetrics {
    pub tasks: usize,
    pub accuracy: f64,
    pub mean_latency: f64,
    pub p50_latency: f64,
    pub p95_latency: f64,
    pub p99_latency: f64,
    pub mean_l_com: f64,
    pub mean_l_tra: f64,
    /// Per tier: tasks that reached it / all tasks.
    pub reach_rate: Vec<f64>,
    /// Per non-final tier: tasks offloaded / tasks that reached it.
    pub offload_rate: Vec<f64>,
    /// Mean executed layers over every tier run.
    pub mean_executed_layers: f64,
    /// Mean of executed / depth over every tier run.
    pub mean_depth_fraction: f64,
    pub accuracy_target: Option<f64>,
    pub target_met: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadResult {
    pub outcomes: Vec<InferenceOutcome>,
    pub metrics: WorkloadMetrics,
}

/// Nearest-rank percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn summarize(outcomes: &[InferenceOutcome], tiers: usize, accuracy_target: Option<f64>) -> WorkloadMetrics {
    let n = outcomes.len() as f64;
    let mut latencies: Vec<f64> = outcomes.iter().map(|o| o.latency.total).collect();
    let mean_latency = latencies.iter().sum::<f64>() / n;
    latencies.sort_by(f64::total_cmp);
    let mut reached = vec![0usize; tiers];
    let mut offloaded = vec![0usize; tiers];
    let (mut layers, mut fraction, mut runs) = (0.0, 0.0, 0usize);
    for o in outcomes {
        for r in &o.tiers {
            reached[r.tier - 1] += 1;
            if r.offload == Some(true) {
                offloaded[r.tier - 1] += 1;
            }
            layers += r.executed_layers as f64;
            fraction += r.executed_layers as f64 / r.depth as f64;
            runs += 1;
        }
    }
    let accuracy = outcomes.iter().filter(|o| o.correct).count() as f64 / n;
    WorkloadMetrics {
        tasks: outcomes.len(),
        accuracy,
        mean_latency,
        p50_latency: percentile(&latencies, 0.50),
        p95_latency: percentile(&latencies, 0.95),
        p99_latency: percentile(&latencies, 0.99),
        mean_l_com: outcomes.iter().map(|o| o.latency.l_com).sum::<f64>() / n,
        mean_l_tra: outcomes.iter().map(|o| o.latency.l_tra).sum::<f64>() / n,
        reach_rate: reached.iter().map(|&r| r as f64 / n).collect(),
        offload_rate: (0..tiers.saturating_sub(1))
            .map(|i| if reached[i] == 0 { 0.0 } else { offloaded[i] as f64 / reached[i] as f64 })
            .collect(),
        mean_executed_layers: layers / runs as f64,
        mean_depth_fraction: fraction / runs as f64,
        accuracy_target,
        target_met: accuracy_target.map(|g| accuracy >= g),
    }
}

/// Run every task (in parallel) and aggregate. Results do not depend on
/// scheduling: each task draws from its own streams and metrics are folded
/// in task order.
pub fn run_workload(tasks: &[Task], chain: &TierChain, accuracy_target: Option<f64>) -> Result<WorkloadResult> {
    if tasks.is_empty() {
        return Err(Error::InvalidInput("empty workload".into()));
    }
    let outcomes = tasks
        .par_iter()
        .map(|t| run_task(t, chain))
        .collect::<Result<Vec<_>>>()?;
    let metrics = summarize(&outcomes, chain.tiers.len(), accuracy_target);
    Ok(WorkloadResult { outcomes, metrics })
}
