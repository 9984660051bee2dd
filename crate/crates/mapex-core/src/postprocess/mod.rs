//! Post-processing of extracted keyphrases: redundancy removal, abbreviation
//! normalization, and absence filtering, applied in that order.
//!
//! Invariants the test suite holds this module to:
//! - every output phrase is an input phrase, or the mined expansion of one;
//! - every output phrase occurs verbatim (case/whitespace-insensitively, at
//!   word boundaries) in the source document;
//! - no two output phrases share a stem key;
//! - running the whole pass twice changes nothing (idempotence).

use std::collections::{HashMap, HashSet};

use crate::text::{fold_key, stem_key};

/// An abbreviation with the expansion it was mined alongside, both in their
/// document surface forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbreviationPair {
    pub abbreviation: String,
    pub expansion: String,
}

/// What one full post-processing pass did, with the surviving phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostProcessReport {
    pub phrases: Vec<String>,
    pub dropped_redundant: usize,
    pub rewritten_abbreviations: usize,
    pub dropped_paired: usize,
    pub dropped_absent: usize,
}

/// Step 1: drop phrases whose stem key was already seen, keeping first
/// occurrences in order ("neural networks" vs "Neural Network").
pub fn dedup_redundant(phrases: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    phrases
        .iter()
        .filter(|p| seen.insert(stem_key(p)))
        .cloned()
        .collect()
}

/// Function words an abbreviation's expansion may skip over — or draw a
/// letter from — when its initials are matched ("Department of Defense" can
/// yield either DD or DOD).
const SKIPPABLE_WORDS: [&str; 8] = ["of", "and", "the", "for", "in", "on", "to", "a"];

/// Step 2 support: mines `Expansion Words (ABBR)` and `ABBR (Expansion
/// Words)` patterns from the document. An abbreviation must be 2–10
/// characters with at least two letters, mostly uppercase; the expansion's
/// word initials must spell the abbreviation in order (with a trailing
/// plural `s` allowance, so `LLMs` pairs with `large language models`).
pub fn mine_abbreviations(document: &str) -> Vec<AbbreviationPair> {
    let mut pairs: Vec<AbbreviationPair> = Vec::new();
    let mut seen = HashSet::new();
    for (before, inner) in parenthesized_segments(document) {
        let mined = mine_expansion_first(before, inner).or_else(|| mine_abbr_first(before, inner));
        if let Some(pair) = mined {
            if seen.insert(fold_key(&pair.abbreviation)) {
                pairs.push(pair);
            }
        }
    }
    pairs
}

/// Step 2: collapse abbreviation/expansion pairs. A phrase matching a mined
/// abbreviation is rewritten to the expansion's surface form; when both
/// members of a pair appear, the earlier occurrence wins. A running
/// stem-key filter keeps rewrites from reintroducing duplicates.
pub fn normalize_abbreviations(phrases: &[String], pairs: &[AbbreviationPair]) -> Vec<String> {
    normalize_detailed(phrases, pairs).0
}

/// Step 3: drop phrases that do not occur in the document. Presence means
/// the fold-normalized phrase appears as a substring of the fold-normalized
/// document with non-alphanumeric (or edge) neighbors on both sides.
pub fn filter_absent(phrases: &[String], document: &str) -> Vec<String> {
    let haystack = fold_key(document);
    phrases
        .iter()
        .filter(|p| contains_at_word_boundary(&haystack, &fold_key(p)))
        .cloned()
        .collect()
}

/// The full pass: dedup → normalize abbreviations → filter absent.
pub fn post_process(candidates: &[String], document: &str) -> PostProcessReport {
    let deduped = dedup_redundant(candidates);
    let dropped_redundant = candidates.len() - deduped.len();

    let pairs = mine_abbreviations(document);
    let (normalized, rewritten_abbreviations) = normalize_detailed(&deduped, &pairs);
    let dropped_paired = deduped.len() - normalized.len();

    let phrases = filter_absent(&normalized, document);
    let dropped_absent = normalized.len() - phrases.len();

    PostProcessReport {
        phrases,
        dropped_redundant,
        rewritten_abbreviations,
        dropped_paired,
        dropped_absent,
    }
}

fn normalize_detailed(phrases: &[String], pairs: &[AbbreviationPair]) -> (Vec<String>, usize) {
    let abbr_index: HashMap<String, usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (fold_key(&p.abbreviation), i))
        .collect();
    let expansion_index: HashMap<String, usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (stem_key(&p.expansion), i))
        .collect();

    let mut pair_done = vec![false; pairs.len()];
    let mut seen_stems = HashSet::new();
    let mut out = Vec::with_capacity(phrases.len());
    let mut rewrites = 0;
    for phrase in phrases {
        let (rendered, pair) = if let Some(&i) = abbr_index.get(&fold_key(phrase)) {
            (pairs[i].expansion.clone(), Some(i))
        } else if let Some(&i) = expansion_index.get(&stem_key(phrase)) {
            (phrase.clone(), Some(i))
        } else {
            (phrase.clone(), None)
        };
        if let Some(i) = pair {
            if pair_done[i] {
                continue;
            }
            pair_done[i] = true;
        }
        if !seen_stems.insert(stem_key(&rendered)) {
            continue;
        }
        if rendered != *phrase {
            rewrites += 1;
        }
        out.push(rendered);
    }
    (out, rewrites)
}

/// Yields `(text_before, inner)` for every non-nested `(...)` group.
fn parenthesized_segments(document: &str) -> impl Iterator<Item = (&str, &str)> {
    let mut rest_start = 0;
    std::iter::from_fn(move || {
        let tail = &document[rest_start..];
        let open_rel = tail.find('(')?;
        let open = rest_start + open_rel;
        let close_rel = document[open + 1..].find(')')?;
        let close = open + 1 + close_rel;
        let inner = &document[open + 1..close];
        let before = &document[..open];
        rest_start = close + 1;
        // Nested opener inside the group: skip this segment entirely.
        if inner.contains('(') {
            return Some(("", ""));
        }
        Some((before, inner))
    })
    .filter(|(before, inner)| !(before.is_empty() && inner.is_empty()))
}

fn is_abbreviation_shaped(token: &str) -> bool {
    let token = token.trim();
    let chars = token.chars().count();
    if !(2..=10).contains(&chars) || token.contains(char::is_whitespace) {
        return false;
    }
    let letters = token.chars().filter(|c| c.is_alphabetic()).count();
    let upper = token.chars().filter(|c| c.is_uppercase()).count();
    let lower = token.chars().filter(|c| c.is_lowercase()).count();
    letters >= 2 && upper > lower
}

fn word_initial(word: &str) -> Option<char> {
    word.chars().find(|c| c.is_alphabetic())
}

fn is_skippable(word: &str) -> bool {
    SKIPPABLE_WORDS.contains(&word.to_lowercase().as_str())
}

/// Can `words` spell `letters` in order, each word contributing its initial,
/// with function words free to contribute or be skipped? All words and all
/// letters must be consumed.
fn initials_match(words: &[&str], letters: &[char]) -> bool {
    if words.is_empty() {
        return letters.is_empty();
    }
    let word = words[0];
    let contributes = match (word_initial(word), letters.first()) {
        (Some(initial), Some(&letter)) => {
            initial.to_lowercase().eq(letter.to_lowercase())
                && initials_match(&words[1..], &letters[1..])
        }
        _ => false,
    };
    contributes || (is_skippable(word) && initials_match(&words[1..], letters))
}

/// Letters of the abbreviation to spell, with a trailing plural `s` dropped
/// when that makes a match possible.
fn abbreviation_letter_variants(abbr: &str) -> Vec<Vec<char>> {
    let letters: Vec<char> = abbr.chars().filter(|c| c.is_alphabetic()).collect();
    let mut variants = vec![letters.clone()];
    if letters.len() > 2 && letters.last().is_some_and(|c| c.eq_ignore_ascii_case(&'s')) {
        variants.push(letters[..letters.len() - 1].to_vec());
    }
    variants
}

/// `... large language models (LLMs)`: the group holds the abbreviation and
/// the words before it hold the expansion. The shortest matching suffix of
/// the preceding words wins.
fn mine_expansion_first(before: &str, inner: &str) -> Option<AbbreviationPair> {
    let abbr = inner.trim();
    if !is_abbreviation_shaped(abbr) {
        return None;
    }
    let variants = abbreviation_letter_variants(abbr);
    let window: Vec<&str> = before
        .split_whitespace()
        .rev()
        .take(variants[0].len() + 3)
        .collect();
    for take in 1..=window.len() {
        let words: Vec<&str> = window[..take].iter().rev().copied().collect();
        for letters in &variants {
            if initials_match(&words, letters) {
                return Some(AbbreviationPair {
                    abbreviation: abbr.to_string(),
                    expansion: trim_expansion(&words),
                });
            }
        }
    }
    None
}

/// `... CPU (central processing unit)`: the word before the group is the
/// abbreviation and the group holds the expansion.
fn mine_abbr_first(before: &str, inner: &str) -> Option<AbbreviationPair> {
    let abbr = before.split_whitespace().next_back()?;
    let abbr = abbr.trim_matches(|c: char| !c.is_alphanumeric());
    if !is_abbreviation_shaped(abbr) {
        return None;
    }
    let words: Vec<&str> = inner.split_whitespace().collect();
    if words.is_empty() {
        return None;
    }
    for letters in abbreviation_letter_variants(abbr) {
        if initials_match(&words, &letters) {
            return Some(AbbreviationPair {
                abbreviation: abbr.to_string(),
                expansion: trim_expansion(&words),
            });
        }
    }
    None
}

/// Joins expansion words, trimming stray punctuation off the outer edges
/// ("... approach; large language models (LLMs)" must not keep the ';').
fn trim_expansion(words: &[&str]) -> String {
    let mut joined = words.join(" ");
    joined = joined
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string();
    joined
}

fn contains_at_word_boundary(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let mut search_from = 0;
    while let Some(rel) = haystack[search_from..].find(needle) {
        let start = search_from + rel;
        let end = start + needle.len();
        let left_ok = haystack[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let right_ok = haystack[end..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric());
        if left_ok && right_ok {
            return true;
        }
        // Advance one character, not one byte, to stay on a boundary.
        let step = haystack[start..].chars().next().map_or(1, char::len_utf8);
        search_from = start + step;
    }
    false
}
