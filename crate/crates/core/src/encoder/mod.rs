//! A small transformer encoder classifier with a classification head after
//! every block, so per-layer predictions and attention maps come from real
//! forward passes.

mod attention;
mod io;
mod model;
mod tokenizer;
mod train;

pub use attention::scaled_dot_attention;
pub use io::{load_weights, read_weights, save_weights, write_weights};
pub use model::{forward, EncoderConfig, ForwardResult, Head, LayerWeights, ModelWeights};
pub use tokenizer::{TokenizationMode, Tokenized, Tokenizer, CLS_ID, DEFAULT_SPLIT_LEN, PAD_ID, SEP_ID};
pub use train::{head_gradient, head_loss, total_head_loss, train_heads, FeatureBatch, TrainOutcome};
