//! Attention-based pruning: importance from a toy encoder's attention maps,
//! the alpha mask, and carrying the mask to a subword tokenizer before the
//! text is shortened for the next tier.
//!
//! ```bash
//! cargo run --example token_pruning
//! ```

use collab_infer::encoder::{forward, EncoderConfig, ModelWeights, TokenizationMode, Tokenizer};
use collab_infer::pruning::{
    accumulate_importance, align_mask, prune_mask, prune_text, word_importance, word_mask, PruneParams,
};

pub fn run() -> collab_infer::Result<()> {
    let text = "the cinematography was stunning but the screenplay felt unconvincing and overlong";
    let weights = ModelWeights::init(EncoderConfig { weight_seed: 3, ..EncoderConfig::default() })?;
    let source = Tokenizer::new(1024, TokenizationMode::Word)?.tokenize(text)?;
    let target = Tokenizer::new(1024, TokenizationMode::Subword)?.tokenize(text)?;

    let out = forward(&source.ids, &weights, None)?;
    let importance = accumulate_importance(&out.attention)?;
    println!("tokens {}, layers x heads x tokens = {}", source.len(), 6 * 2 * source.len());
    println!("importance total {:.6}, average {:.4}", importance.values().iter().sum::<f64>(), importance.ave());
    for (piece, imp) in source.pieces.iter().zip(importance.values()) {
        println!("  {piece:<16} {imp:7.3}");
    }

    for alpha in [0.0, 0.8, 1.0, 1.2] {
        let mask = prune_mask(&importance, &PruneParams::new(alpha)?, source.segmentation.special());
        let aligned = align_mask(&mask, &source.segmentation, &target.segmentation)?;
        let words = word_mask(&aligned, &target.segmentation)?;
        let word_imp = word_importance(&importance, &source.segmentation)?;
        let pruned = prune_text(&target.segmentation, &words, Some(&word_imp))?;
        println!("\nalpha={alpha}: {} of {} tokens kept ({} subword tokens)", mask.kept(), mask.len(), aligned.kept());
        println!("  -> {pruned:?} ({} bytes, was {})", pruned.len(), text.len());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
