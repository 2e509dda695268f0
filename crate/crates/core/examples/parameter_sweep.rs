//! The tau x threshold sweep over the bundled default workload, and the
//! fastest configuration that still meets an accuracy target.
//!
//! ```bash
//! cargo run --release --example parameter_sweep
//! ```

use collab_infer::harness::{report_objective, run_sweep, ExperimentConfig, Selection};

pub fn run() -> collab_infer::Result<()> {
    let config = ExperimentConfig::default_config();
    let report = run_sweep(&config)?;

    println!("{:>5} {:>8} {:>9} {:>10} {:>9} {:>9} {:>8}", "t", "tau", "accuracy", "latency", "L_com", "L_tra", "layers");
    for r in &report.rows {
        println!(
            "{:>5} {:>8} {:>9.3} {:>10.2} {:>9.2} {:>9.2} {:>8.2}",
            r.threshold, r.tau, r.accuracy, r.mean_latency, r.mean_l_com, r.mean_l_tra, r.mean_executed_layers
        );
    }

    for target in [0.85, 0.9, 0.95] {
        match report_objective(&report, target).selection {
            Selection::Row(i) => {
                let r = &report.rows[i];
                println!("target {target}: t={} tau={} ({:.2} ms, accuracy {:.3})", r.threshold, r.tau, r.mean_latency, r.accuracy);
            }
            Selection::Infeasible => println!("target {target}: infeasible"),
        }
    }
    println!("\nconfig hash {}", report.config_hash);
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
