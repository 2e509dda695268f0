use ndarray::{Array1, Array2};

use super::model::{layer_features, Head, ModelWeights};
use crate::decision::softmax_slice;
use crate::error::{Error, Result};

/// Frozen first-token features for a labelled batch, one entry per layer.
#[derive(Debug, Clone)]
pub struct FeatureBatch {
    /// `features[layer][sample]`
    pub features: Vec<Vec<Array1<f64>>>,
    pub labels: Vec<usize>,
}

impl FeatureBatch {
    pub fn extract(weights: &ModelWeights, dataset: &[(Vec<u32>, usize)]) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        let classes = weights.config.classes;
        let mut features = vec![Vec::with_capacity(dataset.len()); weights.config.layers];
        let mut labels = Vec::with_capacity(dataset.len());
        for (tokens, label) in dataset {
            if *label >= classes {
                return Err(Error::InvalidInput(format!("label {label} outside {classes} classes")));
            }
            for (layer, f) in layer_features(tokens, weights)?.into_iter().enumerate() {
                features[layer].push(f);
            }
            labels.push(*label);
        }
        Ok(Self { features, labels })
    }
}

/// Mean cross-entropy of `head` over `(features, labels)`.
pub fn head_loss(head: &Head, features: &[Array1<f64>], labels: &[usize]) -> f64 {
    let total: f64 = features
        .iter()
        .zip(labels)
        .map(|(f, &y)| {
            let z = head.logits(f);
            let max = z.fold(f64::NEG_INFINITY, |m, v| m.max(*v));
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - z[y]
        })
        .sum();
    total / features.len() as f64
}

/// Analytic gradient of [`head_loss`]: `mean((p - onehot(y)) f^T)`.
pub fn head_gradient(head: &Head, features: &[Array1<f64>], labels: &[usize]) -> Head {
    let (d, k) = head.weight.dim();
    let mut gw = Array2::zeros((d, k));
    let mut gb = Array1::zeros(k);
    let n = features.len() as f64;
    for (f, &y) in features.iter().zip(labels) {
        let mut err = Array1::from(softmax_slice(head.logits(f).as_slice().expect("contiguous")));
        err[y] -= 1.0;
        for i in 0..d {
            for c in 0..k {
                gw[[i, c]] += f[i] * err[c] / n;
            }
        }
        gb += &(err / n);
    }
    Head { weight: gw, bias: gb }
}

fn descend(head: &mut Head, features: &[Array1<f64>], labels: &[usize], lr: f64) {
    let g = head_gradient(head, features, labels);
    head.weight.scaled_add(-lr, &g.weight);
    head.bias.scaled_add(-lr, &g.bias);
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: ModelWeights,
    /// Summed head loss before training and after each epoch.
    pub losses: Vec<f64>,
}

/// Summed loss of every process head plus the classifier.
pub fn total_head_loss(weights: &ModelWeights, batch: &FeatureBatch) -> f64 {
    let last = batch.features.len() - 1;
    let process: f64 = weights
        .process_heads
        .iter()
        .zip(&batch.features)
        .map(|(h, f)| head_loss(h, f, &batch.labels))
        .sum();
    process + head_loss(&weights.classifier, &batch.features[last], &batch.labels)
}

/// Full-batch gradient descent on the heads; the encoder body stays frozen.
pub fn train_heads(
    weights: &ModelWeights,
    dataset: &[(Vec<u32>, usize)],
    learning_rate: f64,
    epochs: usize,
) -> Result<TrainOutcome> {
    if !(learning_rate.is_finite() && learning_rate >= 0.0) {
        return Err(Error::InvalidParameter(format!("learning rate {learning_rate}")));
    }
    let batch = FeatureBatch::extract(weights, dataset)?;
    let mut weights = weights.clone();
    let last = batch.features.len() - 1;
    let mut losses = vec![total_head_loss(&weights, &batch)];
    for _ in 0..epochs {
        for (head, f) in weights.process_heads.iter_mut().zip(&batch.features) {
            descend(head, f, &batch.labels, learning_rate);
        }
        descend(&mut weights.classifier, &batch.features[last], &batch.labels, learning_rate);
        losses.push(total_head_loss(&weights, &batch));
    }
    Ok(TrainOutcome { weights, losses })
}
