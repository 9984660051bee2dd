//! Text utilities shared across the pipeline: case/whitespace normalization,
//! stem-keyed phrase identity, and sentence splitting.

mod porter;

pub use porter::stem;

/// Lowercase hex rendering of a byte string (digest output, mostly).
pub fn hex_lower(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for byte in bytes {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Case- and whitespace-insensitive identity for a phrase: lowercased, with
/// every run of whitespace collapsed to a single space and outer whitespace
/// trimmed. Used wherever two surface forms should count as the same phrase
/// without any stemming (parser dedup, cache keys, merge joins).
pub fn fold_key(phrase: &str) -> String {
    let mut key = String::with_capacity(phrase.len());
    for token in phrase.split_whitespace() {
        if !key.is_empty() {
            key.push(' ');
        }
        for c in token.chars() {
            key.extend(c.to_lowercase());
        }
    }
    key
}

/// Stem-level identity for a phrase: `fold_key` followed by Porter-stemming
/// every token. Two phrases with equal stem keys count as the same keyphrase
/// for scoring and for redundancy removal (`"neural networks"` ==
/// `"Neural Network"`).
pub fn stem_key(phrase: &str) -> String {
    let mut key = String::with_capacity(phrase.len());
    for token in phrase.split_whitespace() {
        if !key.is_empty() {
            key.push(' ');
        }
        let lowered = token.to_lowercase();
        key.push_str(&stem(&lowered));
    }
    key
}

/// Splits text into sentences on `.`, `!`, and `?` followed by whitespace or
/// end of input. Good enough for trimming article extracts to their first
/// couple of sentences; not a general-purpose tokenizer.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') {
            let at_end = i + 1 == bytes.len();
            if at_end || bytes[i + 1].is_ascii_whitespace() {
                let sentence = text[start..=i].trim();
                if !sentence.is_empty() {
                    sentences.push(sentence);
                }
                start = i + 1;
            }
        }
        i += 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

/// Truncates `text` to at most `max_tokens` whitespace-separated tokens,
/// cutting at a token boundary. Returns the original slice when it already
/// fits.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    let mut seen = 0;
    let mut last_end = 0;
    let mut in_token = false;
    for (pos, c) in text.char_indices() {
        if c.is_whitespace() {
            in_token = false;
        } else if !in_token {
            in_token = true;
            seen += 1;
            if seen > max_tokens {
                return text[..last_end].trim_end();
            }
        }
        if in_token {
            last_end = pos + c.len_utf8();
        }
    }
    text
}
