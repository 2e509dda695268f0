//! Experiment harness: configuration, workload construction, parameter
//! sweeps, reports, trace generation and temperature calibration.

mod calibrate;
mod config;
mod report;
mod sweep;
mod traces;
pub mod workload;

use std::sync::Arc;

pub use calibrate::{calibrate_file, calibrate_tiers, read_validation, TierCalibration, ValidationSample};
pub use config::{ExperimentConfig, LinkConfig, TierConfig, ToyConfig, WorkloadSpec, CONFIG_VERSION, DEFAULT_CONFIG};
pub use report::{report_objective, Objective, Selection, SweepReport, SweepRow};
pub use sweep::run_sweep;
pub use traces::generate_traces;

use crate::backends::{
    BackendKind, ModelBackend, SyntheticBackend, Tier, TierInput, TierProfile, ToyBackend, TraceBackend, TraceStore,
};
use crate::decision::{CalibrationParams, EarlyExitParams, OffloadParams};
use crate::encoder::{train_heads, ModelWeights};
use crate::error::{Error, Result};
use crate::orchestrator::{run_workload, Hop, Task, TierChain, WorkloadResult};
use crate::rng::Purpose;

/// Word-count range used for training and validation texts when the
/// evaluation workload comes from a trace.
const HELD_OUT_WORDS: (usize, usize) = (8, 20);

/// A configuration turned into runnable parts: the evaluation tasks and a
/// chain whose backends are built (and, for toy tiers, trained) once.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub tasks: Vec<Task>,
    pub classes: usize,
    chain: TierChain,
    store: Option<Arc<TraceStore>>,
}

impl Experiment {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let (tasks, classes, store) = match &config.workload {
            WorkloadSpec::Synthetic { tasks, min_words, max_words } => {
                let tasks = workload::generate(seed, 0..*tasks as u64, *min_words, *max_words, Purpose::Workload, 0);
                (tasks, workload::CLASSES, None)
            }
            WorkloadSpec::Trace { path } => {
                let store = TraceStore::load(path)?;
                if store.header().tiers < config.tiers.len() {
                    return Err(Error::Config(format!(
                        "trace {} holds {} tiers, config has {}",
                        path.display(),
                        store.header().tiers,
                        config.tiers.len()
                    )));
                }
                let tasks: Vec<Task> =
                    store.tasks().into_iter().map(|(id, text, label)| Task { id, text, label }).collect();
                if tasks.is_empty() {
                    return Err(Error::Trace(format!("{} holds no tier-1 records", path.display())));
                }
                (tasks, store.header().classes, Some(Arc::new(store)))
            }
        };

        let mut tiers = Vec::with_capacity(config.tiers.len());
        for i in 0..config.tiers.len() {
            tiers.push(build_tier(config, i, classes, store.as_ref()).map_err(|e| e.at_tier(i + 1))?);
        }
        let hops = config
            .links
            .iter()
            .map(|l| Ok(Hop { link: l.link()?, prune: l.prune()? }))
            .collect::<Result<Vec<_>>>()?;
        let offload = OffloadParams::new(config.thresholds[0], config.scale, seed)?;
        let chain = TierChain::new(tiers, hops, offload, None)?;
        Ok(Self { config: config.clone(), tasks, classes, chain, store })
    }

    /// The chain at threshold `t`, with the exit controller at `tau` or
    /// absent.
    pub fn chain(&self, threshold: f64, tau: Option<f64>) -> Result<TierChain> {
        let offload = OffloadParams::new(threshold, self.config.scale, self.config.seed)?;
        let exit = tau.map(|tau| EarlyExitParams::new(tau, self.config.patience)).transpose()?;
        Ok(self.chain.with_offload(offload).with_early_exit(exit))
    }

    /// Run the workload for one grid cell.
    pub fn run(&self, threshold: f64, tau: Option<f64>) -> Result<WorkloadResult> {
        run_workload(&self.tasks, &self.chain(threshold, tau)?, self.config.accuracy_target)
    }

    pub fn tiers(&self) -> &[Tier] {
        self.chain.tiers()
    }

    pub fn trace_store(&self) -> Option<&TraceStore> {
        self.store.as_deref()
    }

    /// Configuration that replays `trace_path` through trace backends with
    /// the profiles this experiment resolved (including measured toy
    /// accuracies).
    pub fn replay_config(&self, trace_path: impl Into<std::path::PathBuf>) -> ExperimentConfig {
        let mut config = self.config.clone();
        config.workload = WorkloadSpec::Trace { path: trace_path.into() };
        for (tc, tier) in config.tiers.iter_mut().zip(self.tiers()) {
            tc.backend = BackendKind::Trace;
            tc.accuracy = Some(tier.profile.accuracy);
            tc.depth = Some(tier.profile.depth);
            tc.toy = None;
        }
        config
    }
}

fn held_out_words(config: &ExperimentConfig) -> (usize, usize) {
    match config.workload {
        WorkloadSpec::Synthetic { min_words, max_words, .. } => (min_words, max_words),
        WorkloadSpec::Trace { .. } => HELD_OUT_WORDS,
    }
}

fn build_tier(config: &ExperimentConfig, i: usize, classes: usize, store: Option<&Arc<TraceStore>>) -> Result<Tier> {
    let tc = &config.tiers[i];
    let index = i + 1;
    let mut profile = TierProfile {
        index,
        name: tc.name.clone(),
        kind: tc.backend,
        accuracy: tc.accuracy.unwrap_or(1.0),
        cost: tc.cost,
        depth: config.depth(i),
        tokenization: tc.tokenization,
        vocab_size: tc.vocab_size,
        calibration: CalibrationParams::new(tc.temperature)?,
    };
    let backend: Box<dyn ModelBackend> = match tc.backend {
        BackendKind::Synthetic => Box::new(SyntheticBackend::new(
            index,
            profile.accuracy,
            profile.depth,
            classes,
            config.seed,
            config.synthetic,
        )?),
        BackendKind::Trace => {
            let store = store.ok_or_else(|| Error::Config("trace backend requires a trace workload".into()))?;
            if let Some(r) = store.records().iter().find(|r| r.tier == index && r.layers.len() != profile.depth) {
                return Err(Error::Config(format!(
                    "trace record for task {} has {} layers, tier depth is {}",
                    r.task_id,
                    r.layers.len(),
                    profile.depth
                )));
            }
            Box::new(TraceBackend::new(Arc::clone(store), index))
        }
        BackendKind::Toy => {
            let weights = train_toy(config, i, classes)?;
            let backend = ToyBackend::new(Arc::new(weights));
            if tc.accuracy.is_none() {
                profile.accuracy = measure_accuracy(config, i, &profile, &backend)?;
            }
            Box::new(backend)
        }
    };
    Ok(Tier { profile, backend })
}

/// Initialize a toy encoder and train its heads on a held-out set.
fn train_toy(config: &ExperimentConfig, i: usize, classes: usize) -> Result<ModelWeights> {
    let tc = &config.tiers[i];
    let toy = tc.toy.as_ref().expect("validated");
    let index = i + 1;
    let weight_seed = toy.weight_seed.unwrap_or(config.seed.wrapping_add(index as u64));
    let weights = ModelWeights::init(toy.encoder(tc.vocab_size, classes, weight_seed))?;
    let tokenizer = crate::encoder::Tokenizer::new(tc.vocab_size, tc.tokenization)?;
    let (lo, hi) = held_out_words(config);
    let ids = workload::HELD_OUT_BASE..workload::HELD_OUT_BASE + toy.train_tasks as u64;
    let dataset = workload::generate(config.seed, ids, lo, hi, Purpose::Training, index)
        .into_iter()
        .map(|t| Ok((tokenizer.tokenize(&t.text)?.ids, t.label)))
        .collect::<Result<Vec<_>>>()?;
    Ok(train_heads(&weights, &dataset, toy.learning_rate, toy.epochs)?.weights)
}

/// Full-depth accuracy on a held-out validation set.
fn measure_accuracy(config: &ExperimentConfig, i: usize, profile: &TierProfile, backend: &dyn ModelBackend) -> Result<f64> {
    let samples = validation_set(config, i + 1, VALIDATION_TASKS);
    let tokenizer = profile.tokenizer()?;
    let mut correct = 0usize;
    for t in &samples {
        let tokens = tokenizer.tokenize(&t.text)?;
        let input = TierInput { task_id: t.id, label: t.label, text: &t.text, tokens: &tokens };
        if backend.infer(&input, None)?.result.argmax() == t.label {
            correct += 1;
        }
    }
    // A tier that never gets anything right still needs a positive weight.
    Ok((correct as f64 / samples.len() as f64).max(1.0 / samples.len() as f64))
}

const VALIDATION_TASKS: usize = 200;

fn validation_set(config: &ExperimentConfig, tier: usize, n: usize) -> Vec<Task> {
    let (lo, hi) = held_out_words(config);
    let ids = workload::HELD_OUT_BASE..workload::HELD_OUT_BASE + n as u64;
    workload::generate(config.seed, ids, lo, hi, Purpose::Validation, tier)
}
