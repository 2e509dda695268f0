//! Seeded stand-in for a profiled model.
//!
//! For each `(task, tier)` pair a dedicated stream draws, in order:
//!
//! 1. `u ~ U[0,1)`: the final output is correct iff `u < accuracy`;
//! 2. the final max-probability `m`, uniform on `(confidence_low, confidence_high)`;
//! 3. the wrong class used whenever a layer errs (uniform over non-labels);
//! 4. a convergence rate `r ~ U[convergence_low, convergence_high]`.
//!
//! Layer `l` of `L` predicts correctly iff
//! `u < accuracy * (1 - shallow_penalty * (L - l) / L)`, so shallow layers
//! are less accurate and a layer that is right stays right deeper down. Its
//! output is `uniform + w_l * (target_l - uniform)` with
//! `w_l = (1 - r^l) / (1 - r^L)`, where `target_l` puts `m` on the predicted
//! class and spreads the rest evenly. The maxima therefore rise
//! geometrically towards `m` and adjacent-layer differences shrink like
//! `r^l`. Layer `L` is the final output exactly.
//!
//! Importance comes from a separate stream: per-layer importance of token `i`
//! is `n * g_i / sum(g)` with `g_i ~ Exp(1)`, i.e. a flat-Dirichlet share of
//! the `n` units of attention one layer hands out.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use serde::{Deserialize, Serialize};

use super::{replay_record, ModelBackend, ModelOutput, TierInput, TraceRecord};
use crate::decision::{EarlyExitParams, ProbabilityVector};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticParams {
    pub confidence_low: f64,
    pub confidence_high: f64,
    pub convergence_low: f64,
    pub convergence_high: f64,
    pub shallow_penalty: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            confidence_low: 0.5,
            confidence_high: 1.0,
            convergence_low: 0.2,
            convergence_high: 0.6,
            shallow_penalty: 0.15,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self, classes: usize) -> Result<()> {
        let floor = 1.0 / classes as f64;
        if !(self.confidence_low >= floor && self.confidence_low < self.confidence_high && self.confidence_high <= 1.0) {
            return Err(Error::Config(format!(
                "confidence range must satisfy 1/K <= low < high <= 1, got [{}, {}]",
                self.confidence_low, self.confidence_high
            )));
        }
        if !(0.0 <= self.convergence_low && self.convergence_low <= self.convergence_high && self.convergence_high < 1.0) {
            return Err(Error::Config("convergence range must satisfy 0 <= low <= high < 1".into()));
        }
        if !(0.0..=1.0).contains(&self.shallow_penalty) {
            return Err(Error::Config("shallow_penalty must be in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBackend {
    tier: usize,
    accuracy: f64,
    depth: usize,
    classes: usize,
    seed: u64,
    params: SyntheticParams,
}

impl SyntheticBackend {
    pub fn new(tier: usize, accuracy: f64, depth: usize, classes: usize, seed: u64, params: SyntheticParams) -> Result<Self> {
        if !(accuracy > 0.0 && accuracy <= 1.0) {
            return Err(Error::Config(format!("synthetic accuracy must be in (0, 1], got {accuracy}")));
        }
        if depth == 0 || classes < 2 {
            return Err(Error::Config("synthetic backend needs depth >= 1 and >= 2 classes".into()));
        }
        params.validate(classes)?;
        Ok(Self { tier, accuracy, depth, classes, seed, params })
    }

    fn target(&self, class: usize, max_prob: f64) -> Vec<f64> {
        let rest = (1.0 - max_prob) / (self.classes - 1) as f64;
        (0..self.classes).map(|c| if c == class { max_prob } else { rest }).collect()
    }

    fn generate(&self, input: &TierInput<'_>) -> Result<TraceRecord> {
        if input.label >= self.classes {
            return Err(Error::InvalidInput(format!("label {} outside {} classes", input.label, self.classes)));
        }
        let p = &self.params;
        let mut rng = stream(self.seed, input.task_id, self.tier, Purpose::Synthetic);
        let u: f64 = rng.random();
        let open: f64 = Open01.sample(&mut rng);
        let max_prob = p.confidence_low + (p.confidence_high - p.confidence_low) * open;
        let offset = rng.random_range(0..self.classes - 1);
        let wrong = (input.label + 1 + offset) % self.classes;
        let rate = rng.random_range(p.convergence_low..=p.convergence_high);

        let depth = self.depth;
        let uniform = 1.0 / self.classes as f64;
        let final_class = if u < self.accuracy { input.label } else { wrong };
        let result = ProbabilityVector::new(self.target(final_class, max_prob))?;
        let norm = 1.0 - rate.powi(depth as i32);
        let mut layers = Vec::with_capacity(depth);
        for l in 1..depth {
            let layer_acc = self.accuracy * (1.0 - p.shallow_penalty * (depth - l) as f64 / depth as f64);
            let class = if u < layer_acc { input.label } else { wrong };
            let w = (1.0 - rate.powi(l as i32)) / norm;
            let v = self.target(class, max_prob).into_iter().map(|t| uniform + w * (t - uniform)).collect();
            layers.push(ProbabilityVector::new(v)?);
        }
        layers.push(result.clone());

        let n = input.tokens.len();
        let mut imp_rng = stream(self.seed, input.task_id, self.tier, Purpose::Importance);
        let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut imp_rng)).collect();
        let total: f64 = draws.iter().sum();
        let importance = draws.into_iter().map(|g| n as f64 * g / total).collect();

        Ok(TraceRecord {
            task_id: input.task_id,
            tier: self.tier,
            text: input.text.to_string(),
            tokens: input.tokens.ids.clone(),
            label: input.label,
            layers,
            importance,
            result,
        })
    }
}

impl ModelBackend for SyntheticBackend {
    fn infer(&self, input: &TierInput<'_>, exit: Option<&EarlyExitParams>) -> Result<ModelOutput> {
        replay_record(&self.generate(input)?, exit)
    }

    fn record(&self, input: &TierInput<'_>, _tier: usize) -> Result<TraceRecord> {
        self.generate(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::layer_diff;
    use crate::encoder::{TokenizationMode, Tokenizer};

    fn backend(accuracy: f64) -> SyntheticBackend {
        SyntheticBackend::new(1, accuracy, 12, 2, 42, SyntheticParams::default()).unwrap()
    }

    fn run(b: &SyntheticBackend, task_id: u64, label: usize) -> TraceRecord {
        let tok = Tokenizer::new(1024, TokenizationMode::Word).unwrap().tokenize("some words here").unwrap();
        b.record(&TierInput { task_id, label, text: "some words here", tokens: &tok }, 1).unwrap()
    }

    #[test]
    fn perfect_accuracy_always_right() {
        let b = backend(1.0);
        for id in 0..2000 {
            let label = (id % 2) as usize;
            assert_eq!(run(&b, id, label).result.argmax(), label);
        }
    }

    #[test]
    fn empirical_accuracy_tracks_profile() {
        let b = backend(0.9);
        let hits = (0..10_000).filter(|&id| run(&b, id, 0).result.argmax() == 0).count();
        let acc = hits as f64 / 10_000.0;
        assert!((acc - 0.9).abs() <= 0.01, "accuracy {acc}");
    }

    #[test]
    fn layers_converge() {
        let b = backend(0.9);
        for id in 0..500 {
            let r = run(&b, id, 1);
            let first = layer_diff(&r.layers[0], &r.layers[1]).unwrap();
            let last = layer_diff(&r.layers[10], &r.layers[11]).unwrap();
            assert!(last < first, "task {id}: {last} >= {first}");
        }
    }

    #[test]
    fn importance_has_one_unit_per_token_per_layer() {
        let r = run(&backend(0.9), 3, 0);
        assert_eq!(r.importance.len(), 5);
        assert!((r.importance.iter().sum::<f64>() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_record() {
        assert_eq!(run(&backend(0.8), 17, 0), run(&backend(0.8), 17, 0));
        assert_ne!(run(&backend(0.8), 17, 0), run(&backend(0.8), 18, 0));
    }
}
