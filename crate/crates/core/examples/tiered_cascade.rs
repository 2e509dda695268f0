//! A device -> edge -> cloud chain assembled by hand from synthetic tiers,
//! with a per-tier trace of a few tasks and the workload summary.
//!
//! ```bash
//! cargo run --example tiered_cascade
//! ```

use collab_infer::backends::{BackendKind, CostModel, SyntheticBackend, SyntheticParams, Tier, TierProfile};
use collab_infer::decision::{CalibrationParams, EarlyExitParams, OffloadParams};
use collab_infer::encoder::TokenizationMode;
use collab_infer::harness::workload;
use collab_infer::netsim::NetworkLink;
use collab_infer::orchestrator::{run_task, run_workload, Hop, TierChain};
use collab_infer::pruning::PruneParams;
use collab_infer::rng::Purpose;

const SEED: u64 = 42;

fn tier(index: usize, name: &str, accuracy: f64, depth: usize, per_layer_ms: f64) -> collab_infer::Result<Tier> {
    let profile = TierProfile {
        index,
        name: name.into(),
        kind: BackendKind::Synthetic,
        accuracy,
        cost: CostModel { base_ms: 2.0, per_token_ms: 0.1, per_token_sq_ms: 0.0, per_layer_ms },
        depth,
        tokenization: if index == 1 { TokenizationMode::Word } else { TokenizationMode::Subword },
        vocab_size: 1024,
        calibration: CalibrationParams::default(),
    };
    let backend = SyntheticBackend::new(index, accuracy, depth, 2, SEED, SyntheticParams::default())?;
    Ok(Tier { profile, backend: Box::new(backend) })
}

pub fn run() -> collab_infer::Result<()> {
    let tiers = vec![
        tier(1, "device", 0.80, 6, 4.0)?,
        tier(2, "edge", 0.90, 12, 6.0)?,
        tier(3, "cloud", 0.96, 24, 3.0)?,
    ];
    let hops = vec![
        Hop { link: NetworkLink::new(5.0, 0.1)?, prune: PruneParams::new(0.8)? },
        Hop { link: NetworkLink::new(2.0, 0.1)?, prune: PruneParams::new(0.8)? },
    ];
    let chain = TierChain::new(tiers, hops, OffloadParams::new(0.8, 10.0, SEED)?, Some(EarlyExitParams::new(1e-4, 2)?))?;
    let tasks = workload::generate(SEED, 0..500, 8, 20, Purpose::Workload, 0);

    for task in &tasks[..3] {
        let out = run_task(task, &chain)?;
        println!("task {} label {} -> predicted {} ({})", task.id, task.label, out.predicted, if out.correct { "ok" } else { "wrong" });
        println!("  text: {:?}", task.text);
        for r in &out.tiers {
            println!(
                "  tier {}: {:>2}/{:<2} layers, conf {:.3}, p_offload {:.3}, offload {:?}, compute {:.1} ms",
                r.tier, r.executed_layers, r.depth, r.confidence, r.offload_probability, r.offload, r.compute_cost
            );
            if let (Some(text), Some(tx)) = (&r.forwarded_text, r.transmission) {
                println!("          sent {:?} in {tx:.2} ms", text);
            }
        }
        println!("  weights {:?}, latency {:.2} ms\n", out.ensemble_weights, out.latency.total);
    }

    let m = run_workload(&tasks, &chain, Some(0.85))?.metrics;
    println!("{} tasks: accuracy {:.3} (target 0.85 met: {:?})", m.tasks, m.accuracy, m.target_met);
    println!("latency mean {:.2} ms, p50 {:.2}, p95 {:.2}, p99 {:.2}", m.mean_latency, m.p50_latency, m.p95_latency, m.p99_latency);
    println!("compute {:.2} ms + transmission {:.2} ms", m.mean_l_com, m.mean_l_tra);
    println!("reach {:?}, offload {:?}", m.reach_rate, m.offload_rate);
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
