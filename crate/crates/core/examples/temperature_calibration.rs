//! Temperature scaling: fit T by grid search on a deliberately overconfident
//! validation set, then per tier for the default experiment.
//!
//! ```bash
//! cargo run --example temperature_calibration
//! ```

use collab_infer::decision::{calibrate_temperature, confidence, mean_nll, LogitVector, DEFAULT_TEMPERATURE_GRID};
use collab_infer::harness::{calibrate_tiers, Experiment, ExperimentConfig, WorkloadSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run() -> collab_infer::Result<()> {
    // Logit gap 4 (confidence ~0.98) but only 75% of labels agree.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<(LogitVector, usize)> = (0..400)
        .map(|_| {
            let label = usize::from(rng.random_bool(0.25));
            LogitVector::new(vec![4.0, 0.0]).map(|z| (z, label))
        })
        .collect::<Result<_, _>>()?;

    for &t in &DEFAULT_TEMPERATURE_GRID {
        println!("T={t:<5} mean NLL {:.4}", mean_nll(&data, t)?);
    }
    let fitted = calibrate_temperature(&data, &DEFAULT_TEMPERATURE_GRID)?;
    let before = confidence(&data[0].0, Default::default());
    let after = confidence(&data[0].0, fitted);
    println!("fitted T={}: confidence {before:.3} -> {after:.3}\n", fitted.temperature());

    let mut config = ExperimentConfig::default_config();
    config.workload = WorkloadSpec::Synthetic { tasks: 10, min_words: 8, max_words: 20 };
    for fit in calibrate_tiers(&Experiment::build(&config)?, 500, &DEFAULT_TEMPERATURE_GRID)? {
        println!("tier {} {:<6} T={:<5} NLL {:.4} -> {:.4}", fit.tier, fit.name, fit.temperature, fit.nll_before, fit.nll_after);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
