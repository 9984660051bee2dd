//! Deterministic workload generation for the benchmarks, so every run
//! measures the same inputs without pulling in an RNG dependency.

/// Minimal xorshift generator; quality is irrelevant, determinism is not.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}

const STEMS: &[&str] = &[
    "relation",
    "optimization",
    "neural",
    "network",
    "graph",
    "keyphrase",
    "extraction",
    "controller",
    "oscillator",
    "probabilistic",
    "classification",
    "generalization",
    "adjustment",
    "dependent",
    "activate",
    "sensitivity",
    "formalize",
    "electricity",
    "hopefulness",
    "rational",
];

const SUFFIXES: &[&str] = &["", "s", "ed", "ing", "es", "al", "ly"];

/// One pseudo-word: a stem with a plausible suffix.
pub fn word(rng: &mut Lcg) -> String {
    let stem = STEMS[rng.below(STEMS.len())];
    let suffix = SUFFIXES[rng.below(SUFFIXES.len())];
    format!("{stem}{suffix}")
}

/// A whitespace-joined pseudo-document of `n` words.
pub fn document(n: usize, seed: u64) -> String {
    let mut rng = Lcg::new(seed);
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push(if i % 17 == 0 { '\n' } else { ' ' });
        }
        out.push_str(&word(&mut rng));
    }
    out
}

/// `n` pseudo-phrases of 1–3 words each.
pub fn phrases(n: usize, seed: u64) -> Vec<String> {
    let mut rng = Lcg::new(seed);
    (0..n)
        .map(|_| {
            let len = 1 + rng.below(3);
            (0..len)
                .map(|_| word(&mut rng))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
