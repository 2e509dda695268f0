use rayon::prelude::*;

use super::{Experiment, ExperimentConfig, SweepReport, SweepRow};
use crate::error::Result;

/// Build the experiment and run every `(threshold, tau)` cell.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    Experiment::build(config)?.sweep(true)
}

fn descending(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

impl Experiment {
    /// Run the grid. With `early_exit == false` every cell runs without an
    /// exit controller; rows keep their tau labels, so a tau = 0 grid yields
    /// the same report either way.
    pub fn sweep(&self, early_exit: bool) -> Result<SweepReport> {
        let cells: Vec<(f64, f64)> = descending(&self.config.thresholds)
            .into_iter()
            .flat_map(|t| descending(&self.config.taus).into_iter().map(move |tau| (t, tau)))
            .collect();
        let rows = cells
            .par_iter()
            .map(|&(t, tau)| {
                let result = self.run(t, early_exit.then_some(tau))?;
                Ok(SweepRow::new(t, tau, &result.metrics))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepReport {
            seed: self.config.seed,
            config_hash: self.config.hash(),
            tasks: self.tasks.len(),
            tiers: self.tiers().len(),
            accuracy_target: self.config.accuracy_target,
            rows,
        })
    }
}
