//! Parsing of LLM responses that are supposed to contain a list of phrases.
//!
//! Models are prompted for JSON arrays but drift into numbered lists,
//! bullets, comma strings, or bare lines, so parsing is a cascade of
//! strategies from strictest to loosest. The chosen strategy is reported so
//! callers can attach diagnostics to low-confidence parses.

use serde_json::Value;

use crate::text::fold_key;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseStrategy {
    /// A JSON array of strings, possibly fenced or embedded in prose.
    JsonArray,
    /// Lines like `1. phrase` / `2) phrase`.
    NumberedLines,
    /// Lines like `- phrase` / `* phrase` / `• phrase`.
    BulletedLines,
    /// A single line of comma-separated phrases.
    CommaSeparated,
    /// Every non-empty line taken verbatim — the last resort.
    RawLines,
    /// Nothing extractable at all.
    Unparsed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPhrases {
    pub phrases: Vec<String>,
    pub strategy: ParseStrategy,
}

/// Extracts a phrase list from raw model output. Phrases are trimmed,
/// stripped of wrapping quotes/emphasis and trailing punctuation, and
/// deduplicated case-insensitively with first occurrence winning. An
/// unparseable response yields an empty list with `ParseStrategy::Unparsed`
/// — never an error, since response quality is a per-document diagnostic,
/// not a pipeline failure.
pub fn parse_phrase_list(raw: &str) -> ParsedPhrases {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return ParsedPhrases {
            phrases: Vec::new(),
            strategy: ParseStrategy::Unparsed,
        };
    }

    if let Some(items) = try_json(trimmed) {
        return finish(items, ParseStrategy::JsonArray);
    }

    let numbered = capture_lines(trimmed, strip_numbered_marker);
    if !numbered.is_empty() {
        return finish(numbered, ParseStrategy::NumberedLines);
    }

    let bulleted = capture_lines(trimmed, strip_bullet_marker);
    if !bulleted.is_empty() {
        return finish(bulleted, ParseStrategy::BulletedLines);
    }

    if !trimmed.contains('\n') && trimmed.contains(',') {
        let items = trimmed.split(',').map(str::to_string).collect();
        return finish(items, ParseStrategy::CommaSeparated);
    }

    let lines: Vec<String> = trimmed.lines().map(str::to_string).collect();
    finish(lines, ParseStrategy::RawLines)
}

fn finish(items: Vec<String>, strategy: ParseStrategy) -> ParsedPhrases {
    let mut seen = std::collections::HashSet::new();
    let mut phrases = Vec::new();
    for item in items {
        let cleaned = clean_phrase(&item);
        if cleaned.is_empty() {
            continue;
        }
        if seen.insert(fold_key(&cleaned)) {
            phrases.push(cleaned);
        }
    }
    if phrases.is_empty() {
        return ParsedPhrases {
            phrases,
            strategy: ParseStrategy::Unparsed,
        };
    }
    ParsedPhrases { phrases, strategy }
}

/// Tries the content itself, then the first fenced block, then the outermost
/// bracketed substring, as JSON containing a list of phrases.
fn try_json(content: &str) -> Option<Vec<String>> {
    if let Some(items) = parse_json_phrases(content) {
        return Some(items);
    }
    if let Some(block) = fenced_block(content) {
        if let Some(items) = parse_json_phrases(block.trim()) {
            return Some(items);
        }
    }
    let start = content.find('[')?;
    let end = content.rfind(']')?;
    if start < end {
        return parse_json_phrases(&content[start..=end]);
    }
    None
}

fn fenced_block(content: &str) -> Option<&str> {
    let open = content.find("```")?;
    let after_fence = &content[open + 3..];
    // Skip an optional language tag on the opening fence line.
    let body_start = after_fence.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after_fence[body_start..];
    let close = body.find("```")?;
    Some(&body[..close])
}

/// Accepts a JSON array of strings (the prompted format) plus the shapes
/// models actually produce: arrays of one-string objects and objects wrapping
/// the array under a conventional key.
fn parse_json_phrases(content: &str) -> Option<Vec<String>> {
    const WRAPPER_KEYS: [&str; 4] = ["keyphrases", "phrases", "keywords", "candidates"];
    let value: Value = serde_json::from_str(content).ok()?;
    let array = match &value {
        Value::Array(items) => items.as_slice(),
        Value::Object(map) => WRAPPER_KEYS
            .iter()
            .find_map(|key| map.get(*key))
            .and_then(Value::as_array)?
            .as_slice(),
        _ => return None,
    };
    let mut items = Vec::with_capacity(array.len());
    for entry in array {
        match entry {
            Value::String(s) => items.push(s.clone()),
            Value::Object(map) => {
                // e.g. [{"keyphrase": "x"}, ...] — take the object's single
                // string value when unambiguous.
                let strings: Vec<&str> = map.values().filter_map(Value::as_str).collect();
                if strings.len() == 1 {
                    items.push(strings[0].to_string());
                } else {
                    return None;
                }
            }
            _ => return None,
        }
    }
    Some(items)
}

fn capture_lines(content: &str, strip_marker: fn(&str) -> Option<&str>) -> Vec<String> {
    content
        .lines()
        .filter_map(strip_marker)
        .map(str::to_string)
        .collect()
}

/// `1. phrase` / `23) phrase` → `phrase`. Whitespace after the marker is
/// required so decimals like `3.14` at line start are not mistaken for
/// numbering.
fn strip_numbered_marker(line: &str) -> Option<&str> {
    let rest = line.trim_start();
    let digits = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
    if digits == 0 || digits > 3 {
        return None;
    }
    let after_digits = &rest[digits..];
    let after_marker = after_digits.strip_prefix(['.', ')'])?;
    if !after_marker.starts_with(char::is_whitespace) {
        return None;
    }
    let body = after_marker.trim();
    (!body.is_empty()).then_some(body)
}

/// `- phrase` / `* phrase` / `• phrase` → `phrase`, again requiring the
/// space so negative numbers and emphasis don't match.
fn strip_bullet_marker(line: &str) -> Option<&str> {
    let rest = line.trim_start();
    let after_marker = rest.strip_prefix(['-', '*', '•'])?;
    if !after_marker.starts_with(char::is_whitespace) {
        return None;
    }
    let body = after_marker.trim();
    (!body.is_empty()).then_some(body)
}

/// Normalizes one extracted item: trims, unwraps `**emphasis**` and one
/// layer of matching quotes, drops trailing list punctuation, and collapses
/// inner whitespace runs.
fn clean_phrase(item: &str) -> String {
    let mut s = item.trim();
    if let Some(inner) = s.strip_prefix("**").and_then(|rest| rest.strip_suffix("**")) {
        s = inner.trim();
    }
    const QUOTE_PAIRS: [(char, char); 4] = [('"', '"'), ('\'', '\''), ('“', '”'), ('`', '`')];
    for (open, close) in QUOTE_PAIRS {
        if s.len() >= open.len_utf8() + close.len_utf8() {
            if let Some(inner) = s.strip_prefix(open).and_then(|rest| rest.strip_suffix(close)) {
                s = inner.trim();
                break;
            }
        }
    }
    let s = s.trim_end_matches([',', ';', '.']).trim();
    let mut out = String::with_capacity(s.len());
    for token in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}
