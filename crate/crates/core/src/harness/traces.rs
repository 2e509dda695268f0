use rayon::prelude::*;

use super::Experiment;
use crate::backends::{replay_record, TierInput, TraceHeader, TraceRecord, TraceStore};
use crate::error::Result;
use crate::orchestrator::prune_for_next;

impl Experiment {
    /// Full-depth records of every task at every tier.
    ///
    /// Each tier sees the text the previous tier would forward on offload,
    /// i.e. pruned by its full-depth importance with that link's alpha, so a
    /// replay reaches every tier with exactly the recorded tokens.
    pub fn trace_records(&self) -> Result<Vec<TraceRecord>> {
        let chain = self.chain(self.config.thresholds[0], None)?;
        let per_task = self
            .tasks
            .par_iter()
            .map(|task| {
                let mut text = task.text.clone();
                let mut records = Vec::with_capacity(chain.tiers().len());
                for (j, tier) in chain.tiers().iter().enumerate() {
                    let index = j + 1;
                    let step = || -> Result<(TraceRecord, Option<String>)> {
                        let tokens = tier.profile.tokenizer()?.tokenize(&text)?;
                        let input = TierInput { task_id: task.id, label: task.label, text: &text, tokens: &tokens };
                        let record = tier.backend.record(&input, index)?;
                        let next = if j + 1 < chain.tiers().len() {
                            let importance = replay_record(&record, None)?.importance;
                            Some(prune_for_next(&chain, j, &text, &tokens, &importance)?)
                        } else {
                            None
                        };
                        Ok((record, next))
                    };
                    let (record, next) = step().map_err(|e| e.at_tier(index))?;
                    records.push(record);
                    if let Some(next) = next {
                        text = next;
                    }
                }
                Ok(records)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(per_task.into_iter().flatten().collect())
    }
}

/// Generate a self-describing trace store for `experiment`.
pub fn generate_traces(experiment: &Experiment) -> Result<TraceStore> {
    let kinds: Vec<String> = experiment
        .tiers()
        .iter()
        .map(|t| serde_json::to_value(t.profile.kind).expect("enum serializes").as_str().unwrap_or("").to_string())
        .collect();
    let header = TraceHeader {
        seed: experiment.config.seed,
        tiers: experiment.tiers().len(),
        classes: experiment.classes,
        tasks: experiment.tasks.len(),
        generator: format!("{} {} [{}]", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"), kinds.join(",")),
        config: serde_json::to_value(&experiment.config).expect("config serializes"),
    };
    TraceStore::new(header, experiment.trace_records()?)
}
