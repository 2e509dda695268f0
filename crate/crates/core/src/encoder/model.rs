use ndarray::{s, Array1, Array2, Axis};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::attention::scaled_dot_attention;
use crate::decision::{early_exit_step, softmax, EarlyExitParams, EarlyExitState, LogitVector, ProbabilityVector};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

const LN_EPS: f64 = 1e-5;

/// Shape and seed of a toy encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub vocab_size: u32,
    pub classes: usize,
    pub max_len: usize,
    pub weight_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            layers: 6,
            heads: 2,
            d_model: 32,
            d_ff: 64,
            vocab_size: 1024,
            classes: 2,
            max_len: 64,
            weight_seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.layers, self.heads, self.d_model, self.d_ff, self.max_len];
        if dims.contains(&0) || self.vocab_size < 4 || self.classes < 2 {
            return Err(Error::InvalidParameter(format!("degenerate encoder config {self:?}")));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(Error::InvalidParameter(format!(
                "d_model {} is not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.heads
    }
}

/// Linear map from a hidden state to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    /// `d_model x classes`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Head {
    pub fn zeros(d_model: usize, classes: usize) -> Self {
        Self { weight: Array2::zeros((d_model, classes)), bias: Array1::zeros(classes) }
    }

    pub fn logits(&self, features: &Array1<f64>) -> Array1<f64> {
        features.dot(&self.weight) + &self.bias
    }
}

/// One pre-norm encoder block. Q/K/V projections hold all heads side by
/// side; head `h` owns columns `h*d_k .. (h+1)*d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub config: EncoderConfig,
    /// `vocab_size x d_model`
    pub embedding: Array2<f64>,
    pub layers: Vec<LayerWeights>,
    /// One per layer, applied to that layer's first-token state.
    pub process_heads: Vec<Head>,
    /// Classifier used when the pass runs to the end.
    pub classifier: Head,
}

impl ModelWeights {
    /// Random encoder body drawn from `config.weight_seed`; every head starts
    /// at zero and therefore emits the uniform distribution until trained.
    pub fn init(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = StreamRng::seed_from_u64(config.weight_seed);
        let mut gauss = |rows: usize, cols: usize, fan_in: usize| {
            let dist = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).expect("positive std");
            Array2::from_shape_fn((rows, cols), |_| dist.sample(&mut rng))
        };
        let d = config.d_model;
        let embedding = gauss(config.vocab_size as usize, d, 1);
        let layers = (0..config.layers)
            .map(|_| LayerWeights {
                wq: gauss(d, d, d),
                wk: gauss(d, d, d),
                wv: gauss(d, d, d),
                wo: gauss(d, d, d),
                w1: gauss(d, config.d_ff, d),
                b1: Array1::zeros(config.d_ff),
                w2: gauss(config.d_ff, d, config.d_ff),
                b2: Array1::zeros(d),
            })
            .collect();
        Ok(Self {
            config,
            embedding,
            layers,
            process_heads: (0..config.layers).map(|_| Head::zeros(d, config.classes)).collect(),
            classifier: Head::zeros(d, config.classes),
        })
    }
}

/// Everything one forward pass exposes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// Process-head output after each executed layer.
    pub layer_probs: Vec<ProbabilityVector>,
    /// `attention[layer][head]`, each `n x n`.
    pub attention: Vec<Vec<Array2<f64>>>,
    /// Logits behind `result`: the exiting layer's head, or the classifier.
    pub final_logits: LogitVector,
    pub result: ProbabilityVector,
    pub executed_layers: usize,
    pub exited_early: bool,
}

/// Parameter-free layer norm over the last axis.
pub(crate) fn layer_norm(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let mean = row.mean().unwrap_or(0.0);
        let var = row.mapv(|v| (v - mean).powi(2)).mean().unwrap_or(0.0);
        let denom = (var + LN_EPS).sqrt();
        row.mapv_inplace(|v| (v - mean) / denom);
    }
    out
}

fn sinusoidal(n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |(pos, i)| {
        let rate = (pos as f64) / 10_000f64.powf((2 * (i / 2)) as f64 / d as f64);
        if i % 2 == 0 { rate.sin() } else { rate.cos() }
    })
}

/// Runs the encoder block by block and yields the post-block hidden states
/// together with the block's attention maps.
pub(crate) struct Encoder<'w> {
    weights: &'w ModelWeights,
    hidden: Array2<f64>,
    next_layer: usize,
}

impl<'w> Encoder<'w> {
    pub(crate) fn new(weights: &'w ModelWeights, tokens: &[u32]) -> Result<Self> {
        let cfg = &weights.config;
        if tokens.is_empty() {
            return Err(Error::InvalidInput("no tokens".into()));
        }
        if tokens.len() > cfg.max_len {
            return Err(Error::InvalidInput(format!(
                "{} tokens exceed the maximum length {}",
                tokens.len(),
                cfg.max_len
            )));
        }
        if let Some(t) = tokens.iter().find(|t| **t >= cfg.vocab_size) {
            return Err(Error::InvalidInput(format!("token id {t} outside vocabulary")));
        }
        let mut hidden = sinusoidal(tokens.len(), cfg.d_model);
        for (mut row, &t) in hidden.axis_iter_mut(Axis(0)).zip(tokens) {
            row += &weights.embedding.row(t as usize);
        }
        Ok(Self { weights, hidden, next_layer: 0 })
    }

    /// Advance one block. Returns `None` once every block has run.
    pub(crate) fn step(&mut self) -> Option<Result<Vec<Array2<f64>>>> {
        let layer = self.weights.layers.get(self.next_layer)?;
        self.next_layer += 1;
        Some(self.run_block(layer))
    }

    fn run_block(&mut self, layer: &LayerWeights) -> Result<Vec<Array2<f64>>> {
        let cfg = &self.weights.config;
        let d_k = cfg.d_k();
        let normed = layer_norm(&self.hidden);
        let q = normed.dot(&layer.wq);
        let k = normed.dot(&layer.wk);
        let v = normed.dot(&layer.wv);
        let mut concat = Array2::zeros(self.hidden.raw_dim());
        let mut maps = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let cols = s![.., h * d_k..(h + 1) * d_k];
            let (out, attn) = scaled_dot_attention(
                &q.slice(cols).to_owned(),
                &k.slice(cols).to_owned(),
                &v.slice(cols).to_owned(),
                d_k,
            )?;
            concat.slice_mut(cols).assign(&out);
            maps.push(attn);
        }
        self.hidden = &self.hidden + &concat.dot(&layer.wo);
        let normed = layer_norm(&self.hidden);
        let ff = (normed.dot(&layer.w1) + &layer.b1).mapv(|v| v.max(0.0)).dot(&layer.w2) + &layer.b2;
        self.hidden = &self.hidden + &ff;
        Ok(maps)
    }

    /// Normalized hidden state of the first (`[CLS]`) token.
    pub(crate) fn features(&self) -> Array1<f64> {
        layer_norm(&self.hidden.slice(s![0..1, ..]).to_owned()).row(0).to_owned()
    }
}

fn head_probs(head: &Head, features: &Array1<f64>) -> Result<(LogitVector, ProbabilityVector)> {
    let logits = LogitVector::new(head.logits(features).to_vec())?;
    let probs = softmax(&logits);
    Ok((logits, probs))
}

/// Run the encoder over `tokens`, consulting the early-exit controller after
/// every block when `exit` is given.
///
/// Block structure: `x += Attn(LN(x)); x += FFN(LN(x))` with parameter-free
/// layer norm and sinusoidal positions added to the embeddings. Each process
/// head and the classifier read the layer-normed `[CLS]` state.
pub fn forward(tokens: &[u32], weights: &ModelWeights, exit: Option<&EarlyExitParams>) -> Result<ForwardResult> {
    let mut encoder = Encoder::new(weights, tokens)?;
    let mut state = EarlyExitState::new();
    let mut layer_probs = Vec::with_capacity(weights.config.layers);
    let mut attention = Vec::with_capacity(weights.config.layers);
    let mut layer = 0;
    while let Some(maps) = encoder.step() {
        attention.push(maps?);
        layer += 1;
        let features = encoder.features();
        let (logits, probs) = head_probs(&weights.process_heads[layer - 1], &features)?;
        layer_probs.push(probs.clone());
        if let Some(params) = exit {
            state = early_exit_step(state, &probs, params, layer)?;
            if state.has_exited() {
                return Ok(ForwardResult {
                    layer_probs,
                    attention,
                    final_logits: logits,
                    result: probs,
                    executed_layers: layer,
                    exited_early: true,
                });
            }
        }
    }
    let (final_logits, result) = head_probs(&weights.classifier, &encoder.features())?;
    Ok(ForwardResult {
        layer_probs,
        attention,
        final_logits,
        result,
        executed_layers: layer,
        exited_early: false,
    })
}

/// First-token features after every block, for head training.
pub(crate) fn layer_features(tokens: &[u32], weights: &ModelWeights) -> Result<Vec<Array1<f64>>> {
    let mut encoder = Encoder::new(weights, tokens)?;
    let mut out = Vec::with_capacity(weights.config.layers);
    while let Some(step) = encoder.step() {
        step?;
        out.push(encoder.features());
    }
    Ok(out)
}
