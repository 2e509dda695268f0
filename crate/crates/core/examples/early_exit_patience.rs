//! Patience-based early exit on a hand-made sequence of per-layer outputs.
//!
//! ```bash
//! cargo run --example early_exit_patience
//! ```

use collab_infer::decision::{early_exit_step, exit_layer, layer_diff, EarlyExitParams, EarlyExitState, ProbabilityVector};

pub fn run() -> collab_infer::Result<()> {
    // Maxima settle geometrically towards 0.9.
    let layers: Vec<ProbabilityVector> = (1..=12)
        .map(|l| {
            let top = 0.9 - 0.4 * 0.5f64.powi(l);
            ProbabilityVector::new(vec![top, 1.0 - top])
        })
        .collect::<Result<_, _>>()?;

    println!("layer  max      diff");
    for (i, p) in layers.iter().enumerate() {
        let diff = if i == 0 { String::from("-") } else { format!("{:.2e}", layer_diff(&layers[i - 1], p)?) };
        println!("{:>5}  {:.5}  {diff}", i + 1, p.max());
    }

    println!("\n{:>8} {:>9} {:>6}", "tau", "patience", "exit");
    for tau in [0.0, 0.00001, 0.0001, 0.01, 0.1] {
        for patience in [1, 2, 3] {
            let at = exit_layer(&layers, &EarlyExitParams::new(tau, patience)?)?;
            println!("{tau:>8} {patience:>9} {:>6}", at.map_or("none".to_string(), |l| l.to_string()));
        }
    }

    // The same controller driven one layer at a time.
    let params = EarlyExitParams::new(0.01, 2)?;
    let mut state = EarlyExitState::new();
    for (i, p) in layers.iter().enumerate() {
        state = early_exit_step(state, p, &params, i + 1)?;
        if state.has_exited() {
            println!("\nstepwise: exited at layer {} with counter {}", i + 1, state.counter);
            break;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
