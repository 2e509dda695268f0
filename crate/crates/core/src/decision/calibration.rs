use super::{CalibrationParams, LogitVector};
use crate::error::{Error, Result};

/// Temperatures tried by [`calibrate_temperature`] when no grid is given.
pub const DEFAULT_TEMPERATURE_GRID: [f64; 7] = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0];

/// Mean negative log-likelihood of `softmax(logits / T)` against the labels.
///
/// Per-sample losses are summed in sorted order so the result does not depend
/// on the order of `validation`.
pub fn mean_nll(validation: &[(LogitVector, usize)], temperature: f64) -> Result<f64> {
    if validation.is_empty() {
        return Err(Error::InvalidInput("empty validation set".into()));
    }
    let mut losses = validation
        .iter()
        .map(|(logits, label)| {
            let z = logits.as_slice();
            let target = *z.get(*label).ok_or_else(|| {
                Error::InvalidInput(format!("label {label} out of range for {} classes", z.len()))
            })?;
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max) / temperature;
            let lse = max + z.iter().map(|v| (v / temperature - max).exp()).sum::<f64>().ln();
            Ok(lse - target / temperature)
        })
        .collect::<Result<Vec<f64>>>()?;
    losses.sort_by(f64::total_cmp);
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Pick the grid temperature with the lowest validation NLL. Ties go to the
/// smaller temperature.
pub fn calibrate_temperature(
    validation: &[(LogitVector, usize)],
    grid: &[f64],
) -> Result<CalibrationParams> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty temperature grid".into()));
    }
    let mut best: Option<(f64, f64)> = None;
    for &t in grid {
        let cal = CalibrationParams::new(t)?;
        let nll = mean_nll(validation, cal.temperature())?;
        best = match best {
            Some((bt, bn)) if bn < nll || (bn == nll && bt <= t) => Some((bt, bn)),
            _ => Some((t, nll)),
        };
    }
    let (t, _) = best.expect("grid is non-empty");
    CalibrationParams::new(t)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn logits(v: &[f64]) -> LogitVector {
        LogitVector::new(v.to_vec()).unwrap()
    }

    /// Direct NLL evaluation with naive exp/log, no shared code with `mean_nll`.
    fn oracle_nll(set: &[(LogitVector, usize)], t: f64) -> f64 {
        let mut total = 0.0;
        for (l, y) in set {
            let z: f64 = l.as_slice().iter().map(|v| (v / t).exp()).sum();
            total += -((l.as_slice()[*y] / t).exp() / z).ln();
        }
        total / set.len() as f64
    }

    fn oracle_best(set: &[(LogitVector, usize)], grid: &[f64]) -> f64 {
        let mut best = (f64::INFINITY, f64::INFINITY);
        for &t in grid {
            let nll = oracle_nll(set, t);
            if nll < best.1 - 1e-12 || ((nll - best.1).abs() <= 1e-12 && t < best.0) {
                best = (t, nll);
            }
        }
        best.0
    }

    /// Labels appear in exactly the proportions the logits claim.
    fn calibrated_set() -> Vec<(LogitVector, usize)> {
        let mut set = Vec::new();
        for (p, n_pos, n) in [(0.75, 3, 4), (0.9, 9, 10), (0.6, 3, 5), (0.5, 1, 2)] {
            let l = logits(&[f64::ln(p), f64::ln(1.0 - p)]);
            for i in 0..n {
                set.push((l.clone(), if i < n_pos { 0 } else { 1 }));
            }
        }
        set
    }

    #[test]
    fn calibrated_data_selects_unit_temperature() {
        let set = calibrated_set();
        assert_eq!(oracle_best(&set, &DEFAULT_TEMPERATURE_GRID), 1.0);
        let cal = calibrate_temperature(&set, &DEFAULT_TEMPERATURE_GRID).unwrap();
        assert_eq!(cal.temperature(), 1.0);
    }

    #[test]
    fn singleton_grid() {
        let set = vec![(logits(&[5.0, -5.0]), 1)];
        assert_eq!(calibrate_temperature(&set, &[1.0]).unwrap().temperature(), 1.0);
    }

    #[test]
    fn overconfident_wrong_set_picks_largest_temperature() {
        let set: Vec<_> = (0..20).map(|i| (logits(&[6.0 + i as f64 * 0.1, 0.0]), 1)).collect();
        assert_eq!(oracle_best(&set, &DEFAULT_TEMPERATURE_GRID), 5.0);
        let cal = calibrate_temperature(&set, &DEFAULT_TEMPERATURE_GRID).unwrap();
        assert_eq!(cal.temperature(), 5.0);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(calibrate_temperature(&[], &[1.0]), Err(Error::InvalidInput(_))));
        let set = vec![(logits(&[1.0, 0.0]), 0)];
        assert!(matches!(calibrate_temperature(&set, &[]), Err(Error::InvalidInput(_))));
        assert!(calibrate_temperature(&set, &[0.0]).is_err());
        assert!(calibrate_temperature(&[(logits(&[1.0, 0.0]), 2)], &[1.0]).is_err());
    }

    #[test]
    fn ties_prefer_smaller_temperature() {
        // Uniform logits give the same NLL at every temperature.
        let set = vec![(logits(&[0.0, 0.0]), 0)];
        assert_eq!(calibrate_temperature(&set, &[3.0, 1.0, 2.0]).unwrap().temperature(), 1.0);
    }

    proptest! {
        #[test]
        fn matches_oracle_and_ignores_order(
            raw in prop::collection::vec((prop::collection::vec(-4.0f64..4.0, 3), 0usize..3), 1..30),
            rotate in 0usize..30,
        ) {
            let set: Vec<_> = raw.into_iter().map(|(v, y)| (logits(&v), y)).collect();
            let mut shuffled = set.clone();
            shuffled.rotate_left(rotate % set.len());
            shuffled.reverse();
            let a = calibrate_temperature(&set, &DEFAULT_TEMPERATURE_GRID).unwrap();
            let b = calibrate_temperature(&shuffled, &DEFAULT_TEMPERATURE_GRID).unwrap();
            prop_assert_eq!(a, b);
            for &t in &DEFAULT_TEMPERATURE_GRID {
                prop_assert!((mean_nll(&set, t).unwrap() - oracle_nll(&set, t)).abs() < 1e-9);
            }
        }
    }
}
