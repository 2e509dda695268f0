//! Record full-depth traces of a synthetic experiment, write them as JSONL,
//! and replay them through the sweep: the metrics come back unchanged.
//!
//! ```bash
//! cargo run --example trace_replay
//! ```

use collab_infer::harness::{generate_traces, run_sweep, Experiment, ExperimentConfig, WorkloadSpec};
use collab_infer::Error;

pub fn run() -> collab_infer::Result<()> {
    let mut config = ExperimentConfig::default_config();
    config.workload = WorkloadSpec::Synthetic { tasks: 200, min_words: 8, max_words: 20 };
    let experiment = Experiment::build(&config)?;
    let store = generate_traces(&experiment)?;

    let dir = std::env::temp_dir().join(format!("collab-infer-traces-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("traces.jsonl");
    store.save(&path)?;
    let bytes = std::fs::metadata(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?.len();
    println!("{} records for {} tasks x {} tiers, {bytes} bytes", store.records().len(), store.header().tasks, store.header().tiers);
    println!("generator: {}", store.header().generator);

    let live = experiment.sweep(true)?;
    let replayed = run_sweep(&experiment.replay_config(&path))?;
    let _ = std::fs::remove_dir_all(&dir);

    for (a, b) in live.rows.iter().zip(&replayed.rows) {
        println!(
            "t={} tau={:<7} live {:.3} / {:.2} ms   replay {:.3} / {:.2} ms",
            a.threshold, a.tau, a.accuracy, a.mean_latency, b.accuracy, b.mean_latency
        );
    }
    println!("identical: {}", live.rows == replayed.rows);
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
