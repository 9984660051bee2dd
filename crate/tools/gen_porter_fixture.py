#!/usr/bin/env python3
"""Generate the frozen word -> stem fixture for the Porter stemmer tests.

This is an independent implementation of the original Porter suffix-stripping
algorithm (Porter, 1980), written from the published rule tables rather than
from the Rust implementation it validates, so the two can serve as
cross-checks of each other. The Rust test suite asserts exact agreement on
every row of the generated TSV; the committed fixture is the frozen record of
that agreement.

Usage:
    python3 tools/gen_porter_fixture.py > crates/mapex-core/tests/data/porter_reference.tsv
"""

import itertools
import random

VOWELS = "aeiou"


def classify(word: str) -> str:
    """One C/V class letter per character: a,e,i,o,u are vowels, y is a vowel
    when it follows a consonant, everything else is a consonant."""
    pattern = []
    for i, ch in enumerate(word):
        if ch in VOWELS:
            pattern.append("V")
        elif ch == "y" and i > 0 and pattern[i - 1] == "C":
            pattern.append("V")
        else:
            pattern.append("C")
    return "".join(pattern)


def measure(stem: str) -> int:
    """The m of [C](VC)^m[V]: count VC group adjacencies in the class string."""
    groups = [key for key, _ in itertools.groupby(classify(stem))]
    return sum(1 for a, b in zip(groups, groups[1:]) if a == "V" and b == "C")


def has_vowel(stem: str) -> bool:
    return "V" in classify(stem)


def ends_double_consonant(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and classify(word)[-1] == "C"


def ends_cvc(stem: str) -> bool:
    return len(stem) >= 3 and classify(stem)[-3:] == "CVC" and stem[-1] not in "wxy"


def longest_rule(word, rules):
    """The (suffix, replacement) rule with the longest suffix matching word."""
    matches = [rule for rule in rules if word.endswith(rule[0])]
    if not matches:
        return None
    return max(matches, key=lambda rule: len(rule[0]))


def step_1a(word):
    for suffix, repl in (("sses", "ss"), ("ies", "i"), ("ss", "ss"), ("s", "")):
        if word.endswith(suffix):
            return word[: len(word) - len(suffix)] + repl
    return word


def repair_after_1b(stem):
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    if ends_double_consonant(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    if measure(stem) == 1 and ends_cvc(stem):
        return stem + "e"
    return stem


def step_1b(word):
    if word.endswith("eed"):
        # Longest match: a failed measure condition must not fall through
        # to the bare "ed" rule ("feed" stays "feed").
        return word[:-1] if measure(word[:-3]) > 0 else word
    for suffix in ("ed", "ing"):
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if has_vowel(stem):
                return repair_after_1b(stem)
            return word
    return word


def step_1c(word):
    if word.endswith("y") and has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


STEP_2 = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)

STEP_3 = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)

STEP_4 = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def replace_longest(word, rules, min_m):
    rule = longest_rule(word, rules)
    if rule is None:
        return word
    suffix, repl = rule
    stem = word[: len(word) - len(suffix)]
    if measure(stem) > min_m:
        return stem + repl
    return word


def step_4(word):
    rule = longest_rule(word, tuple((s, "") for s in STEP_4))
    if rule is None:
        return word
    suffix, _ = rule
    stem = word[: len(word) - len(suffix)]
    if measure(stem) <= 1:
        return word
    if suffix == "ion" and not stem.endswith(("s", "t")):
        return word
    return stem


def step_5a(word):
    if not word.endswith("e"):
        return word
    stem = word[:-1]
    m = measure(stem)
    if m > 1 or (m == 1 and not ends_cvc(stem)):
        return stem
    return word


def step_5b(word):
    if word.endswith("l") and ends_double_consonant(word) and measure(word) > 1:
        return word[:-1]
    return word


def porter_stem(word):
    if len(word) <= 2 or not word.isascii() or not word.isalpha():
        return word
    word = word.lower()
    for step in (
        step_1a,
        step_1b,
        step_1c,
        lambda w: replace_longest(w, STEP_2, 0),
        lambda w: replace_longest(w, STEP_3, 0),
        step_4,
        step_5a,
        step_5b,
    ):
        word = step(word)
    return word


# Stems that exercise every rule family: the worked examples from the
# published description plus vocabulary typical of scholarly abstracts.
BASES = """
abate access activate adjust adopt agree airline algorithm allow analogous
angular annotate anneal apply approximate attention bias bled bowdlerize
callous caress cat cease classify cluster compute condition conflate conform
connect control critic decisive decode defense depend deploy digitize
document edge effect electric embed encode energy evaluate extract fail fall
feed feudal file fizz form formal gener generate good gradient graph
gyroscope happy hesitance hiss homolog hop hope hypothesize infer irritate
keyword knowledge language learn matrix measure model motor network neural
node normalize operate optimize oscillate phrase plaster pony predicate
probate process propagate quantize radical rank rate rational relate replace
retrieve revive roll sensible sensitive sing size sky summarize supervise
system tan teach tie topic train transform transmit tune valence vector vile
weight
""".split()

SUFFIXES = [
    "", "s", "es", "ies", "ed", "ing", "ings", "er", "ers", "ly", "ally",
    "ation", "ations", "ator", "ization", "izations", "ize", "ized", "izer",
    "ment", "ments", "ement", "ness", "ful", "fulness", "ous", "ously",
    "ousness", "ive", "iveness", "ity", "ities", "al", "able", "ible",
    "ance", "ence", "ant", "ent", "ism", "ate", "icate", "ical", "y", "ier",
]

EDGE_WORDS = """
a i at by ay ee ed ing ies sses eed eye bye dye dying lying tying say stay
toy toys enjoy enjoyed enjoying yy yyy syzygy rhythm sprightly
agreed caresses ponies cats plastered bled motoring conflated troubled sized
hopping tanned falling hissing fizzed failing filing relational conditional
rationalizations generalizations oscillators controlling sensitivity probated
ceased controll feet geese analyses matrices vertices corpora
""".split()


def vocabulary():
    words = set(EDGE_WORDS)
    for base in BASES:
        for suffix in SUFFIXES:
            words.add(base + suffix)
    # Pseudo-random strings from a vowel- and y-heavy alphabet hit the odd
    # corners (y runs, vowelless stems, doubled letters). Seed is fixed so
    # regeneration is reproducible.
    rng = random.Random(0x5EED)
    alphabet = "abcdeyfgilmnoprstuz"
    for _ in range(500):
        length = rng.randint(1, 12)
        words.add("".join(rng.choice(alphabet) for _ in range(length)))
    return sorted(words)


def main():
    for word in vocabulary():
        print(f"{word}\t{porter_stem(word)}")


if __name__ == "__main__":
    main()
