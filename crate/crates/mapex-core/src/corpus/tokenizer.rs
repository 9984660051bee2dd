//! Deterministic token counting for routing and truncation decisions.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::CorpusError;

/// Counts tokens in a document. The default mode counts whitespace-separated
/// words; `Vocab` approximates a subword tokenizer by greedy longest-prefix
/// matching against a vocabulary file (one piece per line), falling back to
/// one token per character where nothing matches. Both modes are pure
/// functions of their input, so routing decisions are reproducible.
#[derive(Debug, Clone)]
pub enum Tokenizer {
    Whitespace,
    Vocab(VocabTokenizer),
}

impl Tokenizer {
    /// Loads a vocabulary file: one piece per line, blank lines and `#`
    /// comments skipped.
    pub fn from_vocab_file(path: &Path) -> Result<Self, CorpusError> {
        let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: PathBuf::from(path),
            source,
        })?;
        let mut pieces = HashSet::new();
        let mut max_piece_chars = 0;
        for line in raw.lines() {
            let piece = line.trim();
            if piece.is_empty() || piece.starts_with('#') {
                continue;
            }
            max_piece_chars = max_piece_chars.max(piece.chars().count());
            pieces.insert(piece.to_string());
        }
        Ok(Tokenizer::Vocab(VocabTokenizer {
            pieces,
            max_piece_chars,
        }))
    }

    pub fn count(&self, text: &str) -> usize {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().count(),
            Tokenizer::Vocab(vocab) => text
                .split_whitespace()
                .map(|word| vocab.count_word(word))
                .sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VocabTokenizer {
    pieces: HashSet<String>,
    max_piece_chars: usize,
}

impl VocabTokenizer {
    /// Greedy longest-prefix segmentation of one whitespace-delimited word:
    /// at each position take the longest vocabulary piece that matches, or
    /// consume a single character as its own token when none does.
    fn count_word(&self, word: &str) -> usize {
        // Byte offsets of every char boundary, including the end.
        let boundaries: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let mut tokens = 0;
        let mut pos = 0; // index into `boundaries`
        while pos + 1 < boundaries.len() {
            let start = boundaries[pos];
            let furthest = (pos + self.max_piece_chars).min(boundaries.len() - 1);
            let matched = (pos + 1..=furthest)
                .rev()
                .find(|&end| self.pieces.contains(&word[start..boundaries[end]]));
            match matched {
                Some(end) => pos = end,
                None => pos += 1,
            }
            tokens += 1;
        }
        tokens
    }
}
