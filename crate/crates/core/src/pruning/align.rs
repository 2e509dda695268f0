use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{ImportanceVector, PruneMask};
use crate::error::{Error, Result};

/// How one tokenizer cut a word sequence into tokens.
///
/// `spans[w]` is the contiguous token range for word `w`. Tokens outside
/// every span must be flagged special.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    words: Vec<String>,
    spans: Vec<Range<usize>>,
    special: Vec<bool>,
}

impl Segmentation {
    pub fn new(words: Vec<String>, spans: Vec<Range<usize>>, special: Vec<bool>) -> Result<Self> {
        if words.len() != spans.len() {
            return Err(Error::InvalidInput(format!(
                "{} words but {} spans",
                words.len(),
                spans.len()
            )));
        }
        let mut covered = vec![false; special.len()];
        let mut prev_end = 0;
        for (w, span) in spans.iter().enumerate() {
            if span.is_empty() || span.start < prev_end || span.end > special.len() {
                return Err(Error::InvalidInput(format!("span {span:?} of word {w} is out of order")));
            }
            for t in span.clone() {
                if special[t] {
                    return Err(Error::InvalidInput(format!("special token {t} inside word {w}")));
                }
                covered[t] = true;
            }
            prev_end = span.end;
        }
        if let Some(t) = (0..special.len()).find(|&t| !covered[t] && !special[t]) {
            return Err(Error::InvalidInput(format!("token {t} belongs to no word")));
        }
        Ok(Self { words, spans, special })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    pub fn special(&self) -> &[bool] {
        &self.special
    }

    pub fn token_count(&self) -> usize {
        self.special.len()
    }

    /// True when every word maps to exactly one token.
    pub fn is_word_level(&self) -> bool {
        self.spans.iter().all(|s| s.len() == 1)
    }
}

/// A word survives if any of its tokens survives.
pub fn word_mask(mask: &PruneMask, seg: &Segmentation) -> Result<Vec<bool>> {
    if mask.len() != seg.token_count() {
        return Err(Error::InvalidInput(format!(
            "mask covers {} tokens, segmentation has {}",
            mask.len(),
            seg.token_count()
        )));
    }
    Ok(seg.spans.iter().map(|s| mask.as_slice()[s.clone()].iter().any(|k| *k)).collect())
}

/// Mean importance of each word's tokens.
pub fn word_importance(importance: &ImportanceVector, seg: &Segmentation) -> Result<Vec<f64>> {
    if importance.len() != seg.token_count() {
        return Err(Error::InvalidInput(format!(
            "importance covers {} tokens, segmentation has {}",
            importance.len(),
            seg.token_count()
        )));
    }
    Ok(seg
        .spans
        .iter()
        .map(|s| importance.values()[s.clone()].iter().sum::<f64>() / s.len() as f64)
        .collect())
}

/// Carry a pruning mask from one tokenization of a text to another.
///
/// Identical segmentations copy the mask token for token. Otherwise each word
/// is kept unless all of its source tokens were pruned, and the decision is
/// applied to every target token of that word. Target special tokens are kept.
pub fn align_mask(mask: &PruneMask, source: &Segmentation, target: &Segmentation) -> Result<PruneMask> {
    if source.words != target.words {
        return Err(Error::Alignment(format!(
            "source has {} words, target has {}, or they differ",
            source.words.len(),
            target.words.len()
        )));
    }
    let per_word = word_mask(mask, source)?;
    if source.spans == target.spans && source.special == target.special {
        return Ok(mask.clone());
    }
    let mut keep = target.special.clone();
    for (span, decision) in target.spans.iter().zip(per_word) {
        for t in span.clone() {
            keep[t] = decision;
        }
    }
    Ok(PruneMask::new(keep))
}

/// Join the kept words with single spaces.
///
/// If nothing survives, the word with the highest importance (first word when
/// no importance is given) is kept so the next tier never sees empty input.
pub fn prune_text(seg: &Segmentation, word_mask: &[bool], word_importance: Option<&[f64]>) -> Result<String> {
    if word_mask.len() != seg.words.len() {
        return Err(Error::InvalidInput(format!(
            "word mask has {} entries for {} words",
            word_mask.len(),
            seg.words.len()
        )));
    }
    let mut keep = word_mask.to_vec();
    if !keep.iter().any(|k| *k) && !keep.is_empty() {
        let top = match word_importance {
            Some(imp) => {
                let mut best = 0;
                for (i, v) in imp.iter().enumerate() {
                    if *v > imp[best] {
                        best = i;
                    }
                }
                best
            }
            None => 0,
        };
        keep[top] = true;
    }
    let kept: Vec<&str> = seg
        .words
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(w, _)| w.as_str())
        .collect();
    Ok(kept.join(" "))
}
