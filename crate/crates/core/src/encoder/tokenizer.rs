use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pruning::Segmentation;

pub const PAD_ID: u32 = 0;
pub const CLS_ID: u32 = 1;
pub const SEP_ID: u32 = 2;
const FIRST_WORD_ID: u32 = 3;

/// Default piece length for subword mode.
pub const DEFAULT_SPLIT_LEN: usize = 6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizationMode {
    /// One token per whitespace-separated word.
    #[default]
    Word,
    /// Words longer than the split length become a root piece followed by
    /// `##`-prefixed suffix pieces of at most that length.
    Subword,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenized {
    pub ids: Vec<u32>,
    pub pieces: Vec<String>,
    pub segmentation: Segmentation,
}

impl Tokenized {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Hash-bucket tokenizer with `[CLS]` / `[SEP]` framing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    vocab_size: u32,
    split_len: usize,
    mode: TokenizationMode,
}

impl Tokenizer {
    pub fn new(vocab_size: u32, mode: TokenizationMode) -> Result<Self> {
        Self::with_split_len(vocab_size, mode, DEFAULT_SPLIT_LEN)
    }

    pub fn with_split_len(vocab_size: u32, mode: TokenizationMode, split_len: usize) -> Result<Self> {
        if vocab_size <= FIRST_WORD_ID {
            return Err(Error::InvalidParameter(format!("vocabulary of {vocab_size} is too small")));
        }
        if split_len == 0 {
            return Err(Error::InvalidParameter("split length must be positive".into()));
        }
        Ok(Self { vocab_size, split_len, mode })
    }

    pub fn mode(&self) -> TokenizationMode {
        self.mode
    }

    pub fn tokenize(&self, text: &str) -> Result<Tokenized> {
        let words: Vec<String> = text.split_whitespace().map(String::from).collect();
        if words.is_empty() {
            return Err(Error::InvalidInput("cannot tokenize empty text".into()));
        }
        let mut ids = vec![CLS_ID];
        let mut pieces = vec!["[CLS]".to_string()];
        let mut spans = Vec::with_capacity(words.len());
        for word in &words {
            let start = pieces.len();
            for piece in self.split_word(word) {
                ids.push(self.piece_id(&piece));
                pieces.push(piece);
            }
            spans.push(start..pieces.len());
        }
        ids.push(SEP_ID);
        pieces.push("[SEP]".to_string());
        let mut special = vec![false; ids.len()];
        special[0] = true;
        *special.last_mut().unwrap() = true;
        let segmentation = Segmentation::new(words, spans, special)?;
        Ok(Tokenized { ids, pieces, segmentation })
    }

    fn split_word(&self, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        if self.mode == TokenizationMode::Word || chars.len() <= self.split_len {
            return vec![word.to_string()];
        }
        chars
            .chunks(self.split_len)
            .enumerate()
            .map(|(i, c)| {
                let s: String = c.iter().collect();
                if i == 0 { s } else { format!("##{s}") }
            })
            .collect()
    }

    fn piece_id(&self, piece: &str) -> u32 {
        // FNV-1a over the lowercased piece.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in piece.to_lowercase().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        FIRST_WORD_ID + (h % u64::from(self.vocab_size - FIRST_WORD_ID)) as u32
    }
}
