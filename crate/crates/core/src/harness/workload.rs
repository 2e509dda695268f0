//! Generated review-like texts for the binary sentiment workload.
//!
//! Each task draws its label and words from its own `Workload` stream, so
//! task `i` is the same text whatever the workload size. A word is taken
//! from the label's lexicon with probability [`SIGNAL_RATE`], otherwise from
//! a neutral filler list. Both lists mix short words with long ones so that
//! subword tokenizers actually split something.

use std::ops::Range;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::orchestrator::Task;
use crate::rng::{stream, Purpose, StreamRng};

pub const CLASSES: usize = 2;
pub const SIGNAL_RATE: f64 = 0.35;
pub const HELD_OUT_BASE: u64 = 1 << 40;

const NEGATIVE: &[&str] = &[
    "dull", "boring", "awful", "weak", "messy", "bland", "tedious", "disappointing", "forgettable",
    "clumsy", "lifeless", "overlong", "predictable", "unconvincing", "tiresome", "poor", "flat",
];

const POSITIVE: &[&str] = &[
    "great", "moving", "sharp", "superb", "fresh", "delightful", "wonderful", "gripping", "charming",
    "brilliant", "memorable", "heartfelt", "inventive", "stunning", "fun", "warm", "rich",
];

const FILLER: &[&str] = &[
    "the", "film", "movie", "story", "a", "and", "of", "with", "cast", "director", "performances",
    "soundtrack", "was", "is", "this", "its", "ending", "characters", "screenplay", "cinematography",
    "plot", "scenes", "in", "at", "an", "overall", "production", "dialogue",
];

fn lexicon(label: usize) -> &'static [&'static str] {
    if label == 0 {
        NEGATIVE
    } else {
        POSITIVE
    }
}

/// One labelled text drawn from `rng`.
pub fn sample_text(rng: &mut StreamRng, min_words: usize, max_words: usize) -> (String, usize) {
    let label = rng.random_range(0..CLASSES);
    let words = rng.random_range(min_words..=max_words);
    let text: Vec<&str> = (0..words)
        .map(|_| {
            let list = if rng.random_bool(SIGNAL_RATE) { lexicon(label) } else { FILLER };
            *list.choose(rng).expect("non-empty word list")
        })
        .collect();
    (text.join(" "), label)
}

/// Tasks with the given ids, drawn with `purpose` under stream tier `tier`.
///
/// The evaluation workload uses `(Workload, 0)` and ids from 0; training and
/// validation sets use their own purposes and ids from [`HELD_OUT_BASE`], so
/// seeded backends keyed by task id never see an evaluation task twice.
pub fn generate(seed: u64, ids: Range<u64>, min_words: usize, max_words: usize, purpose: Purpose, tier: usize) -> Vec<Task> {
    ids
        .map(|id| {
            let mut rng = stream(seed, id, tier, purpose);
            let (text, label) = sample_text(&mut rng, min_words, max_words);
            Task { id, text, label }
        })
        .collect()
}
