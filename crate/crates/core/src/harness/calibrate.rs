use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validation_set, Experiment};
use crate::backends::{BackendKind, TierInput};
use crate::decision::{calibrate_temperature, mean_nll, LogitVector};
use crate::error::{Error, Result};

/// One line of a validation file: `{"logits":[...],"label":k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSample {
    pub logits: LogitVector,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierCalibration {
    pub tier: usize,
    pub name: String,
    pub samples: usize,
    pub temperature: f64,
    /// Mean NLL at T = 1 and at the fitted temperature.
    pub nll_before: f64,
    pub nll_after: f64,
}

fn fit(tier: usize, name: &str, data: &[(LogitVector, usize)], grid: &[f64]) -> Result<TierCalibration> {
    let fitted = calibrate_temperature(data, grid)?;
    Ok(TierCalibration {
        tier,
        name: name.to_string(),
        samples: data.len(),
        temperature: fitted.temperature(),
        nll_before: mean_nll(data, 1.0)?,
        nll_after: mean_nll(data, fitted.temperature())?,
    })
}

/// Fit a temperature per tier from full-depth outputs on held-out texts,
/// or from the stored records when the tier replays a trace.
pub fn calibrate_tiers(experiment: &Experiment, samples: usize, grid: &[f64]) -> Result<Vec<TierCalibration>> {
    experiment
        .tiers()
        .iter()
        .map(|tier| {
            let index = tier.profile.index;
            let data: Vec<(LogitVector, usize)> = if tier.profile.kind == BackendKind::Trace {
                let store = experiment.trace_store().expect("trace tiers come with a store");
                store
                    .records()
                    .iter()
                    .filter(|r| r.tier == index)
                    .take(samples)
                    .map(|r| (LogitVector::from_probabilities(&r.result), r.label))
                    .collect()
            } else {
                let tokenizer = tier.profile.tokenizer()?;
                validation_set(&experiment.config, index, samples)
                    .iter()
                    .map(|t| {
                        let tokens = tokenizer.tokenize(&t.text)?;
                        let input = TierInput { task_id: t.id, label: t.label, text: &t.text, tokens: &tokens };
                        let out = tier.backend.infer(&input, None)?;
                        Ok((LogitVector::from_probabilities(&out.result), t.label))
                    })
                    .collect::<Result<_>>()?
            };
            fit(index, &tier.profile.name, &data, grid).map_err(|e| e.at_tier(index))
        })
        .collect()
}

pub fn read_validation(path: &Path) -> Result<Vec<(LogitVector, usize)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: ValidationSample = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push((s.logits, s.label));
    }
    Ok(out)
}

/// Fit one temperature to a validation file.
pub fn calibrate_file(path: &Path, grid: &[f64]) -> Result<TierCalibration> {
    let data = read_validation(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    fit(0, &name, &data, grid)
}
