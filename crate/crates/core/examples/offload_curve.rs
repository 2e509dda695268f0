//! The confidence -> offload-probability curve for a few thresholds, plus
//! how often a seeded Bernoulli draw actually offloads.
//!
//! ```bash
//! cargo run --example offload_curve
//! ```

use collab_infer::decision::{decide_offload, offload_probability, OffloadParams};
use collab_infer::rng::{stream, Purpose};

pub fn run() -> collab_infer::Result<()> {
    let thresholds = [0.7, 0.8, 0.9];
    let params: Vec<OffloadParams> =
        thresholds.iter().map(|&t| OffloadParams::new(t, 10.0, 7)).collect::<Result<_, _>>()?;

    println!("{:>6} {}", "conf", thresholds.map(|t| format!("{:>9}", format!("t={t}"))).join(""));
    for step in 10..=20 {
        let conf = step as f64 / 20.0;
        let row: Vec<String> = params
            .iter()
            .map(|p| offload_probability(conf, p).map(|v| format!("{v:>9.4}")))
            .collect::<Result<_, _>>()?;
        println!("{conf:>6.2} {}", row.join(""));
    }

    // Empirical rate at conf = 0.95, t = 0.8, over 10k per-task streams.
    let p = offload_probability(0.95, &params[1])?;
    let hits = (0..10_000u64).filter(|&task| decide_offload(p, &mut stream(7, task, 1, Purpose::Offload))).count();
    println!("\nconf=0.95 t=0.8: p={p:.4}, observed {:.4} over 10000 draws", hits as f64 / 10_000.0);
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
