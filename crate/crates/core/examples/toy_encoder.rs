//! Train the toy encoder's per-layer heads on generated reviews, save and
//! reload the weights, then classify with and without early exit.
//!
//! ```bash
//! cargo run --example toy_encoder
//! ```

use collab_infer::encoder::{forward, load_weights, save_weights, train_heads, EncoderConfig, ModelWeights, TokenizationMode, Tokenizer};
use collab_infer::decision::EarlyExitParams;
use collab_infer::harness::workload;
use collab_infer::rng::Purpose;

pub fn run() -> collab_infer::Result<()> {
    let tokenizer = Tokenizer::new(1024, TokenizationMode::Word)?;
    let encode = |range, purpose| -> collab_infer::Result<Vec<(Vec<u32>, usize)>> {
        workload::generate(11, range, 8, 20, purpose, 1)
            .into_iter()
            .map(|t| Ok((tokenizer.tokenize(&t.text)?.ids, t.label)))
            .collect()
    };
    let train = encode(0..300, Purpose::Training)?;
    let test = encode(0..200, Purpose::Validation)?;

    let init = ModelWeights::init(EncoderConfig { weight_seed: 11, ..EncoderConfig::default() })?;
    let trained = train_heads(&init, &train, 0.1, 300)?;
    let losses = &trained.losses;
    println!("summed head loss: {:.4} -> {:.4} over {} epochs", losses[0], losses[losses.len() - 1], losses.len() - 1);

    let dir = std::env::temp_dir().join(format!("collab-infer-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| collab_infer::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("toy.ciwt");
    save_weights(&path, &trained.weights)?;
    let weights = load_weights(&path)?;
    assert_eq!(weights, trained.weights);
    println!("weights round-tripped through {}", path.display());
    let _ = std::fs::remove_dir_all(&dir);

    for exit in [None, Some(EarlyExitParams::new(0.01, 2)?), Some(EarlyExitParams::new(0.05, 1)?)] {
        let (mut correct, mut layers) = (0, 0);
        for (tokens, label) in &test {
            let out = forward(tokens, &weights, exit.as_ref())?;
            correct += usize::from(out.result.argmax() == *label);
            layers += out.executed_layers;
        }
        let name = exit.map_or("no exit".to_string(), |e| format!("tau={} p={}", e.tau(), e.patience()));
        println!(
            "{name:<16} accuracy {:.3}, mean layers {:.2}",
            correct as f64 / test.len() as f64,
            layers as f64 / test.len() as f64
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
