use serde::{Deserialize, Serialize};

use super::ProbabilityVector;
use crate::error::{Error, Result};

/// Exit once `patience` consecutive adjacent-layer differences fall below
/// `tau`. With `tau = 0` no difference can qualify, so the controller never
/// fires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyExitParams {
    tau: f64,
    patience: u32,
}

impl EarlyExitParams {
    pub fn new(tau: f64, patience: u32) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
        }
        if patience == 0 {
            return Err(Error::InvalidParameter("patience must be at least 1".into()));
        }
        Ok(Self { tau, patience })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn patience(&self) -> u32 {
        self.patience
    }
}

/// Patience counter carried across the layers of one forward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EarlyExitState {
    pub counter: u32,
    pub last_probs: Option<ProbabilityVector>,
    pub exited_at_layer: Option<usize>,
    last_layer: Option<usize>,
}

impl EarlyExitState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_exited(&self) -> bool {
        self.exited_at_layer.is_some()
    }
}

/// `|max(curr) - max(prev)|`, each maximum taken over its own vector.
pub fn layer_diff(prev: &ProbabilityVector, curr: &ProbabilityVector) -> Result<f64> {
    if prev.len() != curr.len() {
        return Err(Error::InvalidInput(format!(
            "layer outputs differ in length ({} vs {})",
            prev.len(),
            curr.len()
        )));
    }
    Ok((curr.max() - prev.max()).abs())
}

/// Feed layer `layer_index` (1-based) into the controller.
///
/// A difference strictly below `tau` extends the streak; anything else,
/// including a difference exactly equal to `tau`, resets it. When the streak
/// reaches the patience the state records the exit layer and the caller must
/// stop, using `curr` as the model's result.
pub fn early_exit_step(
    mut state: EarlyExitState,
    curr: &ProbabilityVector,
    params: &EarlyExitParams,
    layer_index: usize,
) -> Result<EarlyExitState> {
    if let Some(layer) = state.exited_at_layer {
        return Err(Error::Usage(format!("controller already exited at layer {layer}")));
    }
    let expected = state.last_layer.map_or(layer_index.max(1), |l| l + 1);
    if layer_index == 0 || layer_index != expected {
        return Err(Error::Usage(format!(
            "layer index {layer_index} out of sequence (expected {expected})"
        )));
    }
    if let Some(prev) = &state.last_probs {
        let diff = layer_diff(prev, curr)?;
        if diff < params.tau {
            state.counter += 1;
        } else {
            state.counter = 0;
        }
        if state.counter >= params.patience {
            state.exited_at_layer = Some(layer_index);
        }
    }
    state.last_probs = Some(curr.clone());
    state.last_layer = Some(layer_index);
    Ok(state)
}

/// Run the controller over a full stack of per-layer outputs and return the
/// layer it would stop at, if any.
pub fn exit_layer(layers: &[ProbabilityVector], params: &EarlyExitParams) -> Result<Option<usize>> {
    let mut state = EarlyExitState::new();
    for (i, probs) in layers.iter().enumerate() {
        state = early_exit_step(state, probs, params, i + 1)?;
        if state.has_exited() {
            break;
        }
    }
    Ok(state.exited_at_layer)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    /// Binary outputs whose maxima follow `maxima`.
    fn layers_with_maxima(maxima: &[f64]) -> Vec<ProbabilityVector> {
        maxima.iter().map(|&m| pv(&[m, 1.0 - m])).collect()
    }

    /// Maxima starting at 0.6 whose successive differences are `diffs`.
    fn layers_with_diffs(diffs: &[f64]) -> Vec<ProbabilityVector> {
        let mut maxima = vec![0.6];
        for d in diffs {
            maxima.push(maxima.last().unwrap() + d);
        }
        layers_with_maxima(&maxima)
    }

    #[test]
    fn layer_diff_examples() {
        assert_eq!(layer_diff(&pv(&[0.3, 0.7]), &pv(&[0.3, 0.7])).unwrap(), 0.0);
        assert_abs_diff_eq!(layer_diff(&pv(&[0.6, 0.4]), &pv(&[0.9, 0.1])).unwrap(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(layer_diff(&pv(&[0.7, 0.3]), &pv(&[0.5, 0.5])).unwrap(), 0.2, epsilon = 1e-15);
        assert!(layer_diff(&pv(&[0.5, 0.5]), &pv(&[0.2, 0.3, 0.5])).is_err());
    }

    #[test]
    fn zero_tau_never_exits() {
        let params = EarlyExitParams::new(0.0, 1).unwrap();
        let same = vec![pv(&[0.5, 0.5]); 50];
        assert_eq!(exit_layer(&same, &params).unwrap(), None);
    }

    #[test]
    fn three_small_diffs_exit_on_third() {
        let params = EarlyExitParams::new(0.01, 3).unwrap();
        let layers = layers_with_diffs(&[0.001, 0.001, 0.001]);
        // Layer 1 only initializes; the third qualifying diff arrives at layer 4.
        assert_eq!(exit_layer(&layers, &params).unwrap(), Some(4));
    }

    #[test]
    fn large_diff_resets_streak() {
        let params = EarlyExitParams::new(0.01, 2).unwrap();
        let layers = layers_with_diffs(&[0.001, 0.3, 0.001]);
        assert_eq!(exit_layer(&layers, &params).unwrap(), None);
    }

    #[test]
    fn diff_equal_to_tau_resets() {
        let params = EarlyExitParams::new(0.25, 1).unwrap();
        let layers = layers_with_maxima(&[0.5, 0.75]);
        assert_eq!(exit_layer(&layers, &params).unwrap(), None);
    }

    #[test]
    fn stepping_after_exit_is_a_usage_error() {
        let params = EarlyExitParams::new(0.5, 1).unwrap();
        let p = pv(&[0.5, 0.5]);
        let s = early_exit_step(EarlyExitState::new(), &p, &params, 1).unwrap();
        let s = early_exit_step(s, &p, &params, 2).unwrap();
        assert_eq!(s.exited_at_layer, Some(2));
        assert!(matches!(early_exit_step(s, &p, &params, 3), Err(Error::Usage(_))));
    }

    #[test]
    fn out_of_order_layers_are_rejected() {
        let params = EarlyExitParams::new(0.5, 3).unwrap();
        let p = pv(&[0.5, 0.5]);
        let s = early_exit_step(EarlyExitState::new(), &p, &params, 1).unwrap();
        assert!(matches!(early_exit_step(s, &p, &params, 3), Err(Error::Usage(_))));
        assert!(matches!(
            early_exit_step(EarlyExitState::new(), &p, &params, 0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn invalid_params() {
        assert!(EarlyExitParams::new(-0.1, 1).is_err());
        assert!(EarlyExitParams::new(0.1, 0).is_err());
    }

    fn exit_or_end(layers: &[ProbabilityVector], tau: f64, patience: u32) -> usize {
        let params = EarlyExitParams::new(tau, patience).unwrap();
        exit_layer(layers, &params).unwrap().unwrap_or(layers.len())
    }

    proptest! {
        #[test]
        fn exit_layer_monotone_in_tau_and_patience(
            maxima in prop::collection::vec(0.5f64..1.0, 2..24),
            tau_a in 0.0f64..0.2,
            tau_b in 0.0f64..0.2,
            p_a in 1u32..5,
            p_b in 1u32..5,
        ) {
            let layers = layers_with_maxima(&maxima);
            let (lo, hi) = if tau_a <= tau_b { (tau_a, tau_b) } else { (tau_b, tau_a) };
            prop_assert!(exit_or_end(&layers, hi, p_a) <= exit_or_end(&layers, lo, p_a));
            let (plo, phi) = if p_a <= p_b { (p_a, p_b) } else { (p_b, p_a) };
            prop_assert!(exit_or_end(&layers, lo, plo) <= exit_or_end(&layers, lo, phi));
        }

        #[test]
        fn zero_tau_never_exits_on_any_sequence(
            maxima in prop::collection::vec(0.5f64..1.0, 1..40),
            patience in 1u32..6,
        ) {
            let layers = layers_with_maxima(&maxima);
            let params = EarlyExitParams::new(0.0, patience).unwrap();
            prop_assert_eq!(exit_layer(&layers, &params).unwrap(), None);
        }
    }
}
