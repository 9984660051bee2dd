//! Shared test support: a deterministic chat-API stub, an encyclopedia
//! stub, a synthetic corpus generator, and a helper for driving the
//! compiled binary.
//!
//! The stub and the generator share one contract: every phrase mention in
//! a synthetic document sits in a sentence of the form
//! `... covers <phrase> in depth.` — gold phrases twice, filler phrases
//! once — so the stub can "extract" by scanning for repeated mentions.
//! The stub plays each persona differently on purpose: the neutral persona
//! ranks filler early, the recruited persona ranks gold early, topic
//! refinement is strong on long documents, knowledge refinement on short
//! ones. That is what gives the pipeline variants graded, length-dependent
//! scores in the fixtures, including a relative-gain crossover around the
//! routing threshold.

#![allow(dead_code)]

use std::path::PathBuf;

use axum::extract::Path;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use mapex_core::corpus::Document;

/// Two-word phrases with pairwise distinct words; the first word of each
/// doubles as its topic label. None of these words appear in filler,
/// padding, or boilerplate sentences.
pub const TOPIC_PHRASES: [&str; 12] = [
    "adaptive routing",
    "spectral clustering",
    "graph embeddings",
    "quantum annealing",
    "sparse attention",
    "neural decoding",
    "robust optimization",
    "federated averaging",
    "kernel regression",
    "markov blankets",
    "entropy coding",
    "manifold alignment",
];

/// Present in documents (once each) but never in gold; the encyclopedia
/// stub has no page for anything containing `zz`.
pub const FILLER_PHRASES: [&str; 2] = ["zz noise probe", "zz drift artifact"];

/// Emitted by the stub but present in no document — exercises the absence
/// filter. Contains `latency`, the extra topic the stub names for long
/// documents, so topic refinement keeps it and post-processing removes it.
pub const PHANTOM_PHRASE: &str = "phantom latency metric";

pub const ABBREVIATION: &str = "LLMs";
pub const EXPANSION: &str = "large language models";

/// Mirrors the pipeline's default routing threshold.
pub const LENGTH_THRESHOLD: usize = 512;

/// Model name pinned in recorded fixtures; replay must use the same name
/// or every request fingerprint changes.
pub const FIXTURE_MODEL: &str = "fixture-chat";

/// Token targets of the small fixture corpus: six short documents spread
/// over ln-bins 11–14 and four long ones over bins 16–18, leaving bin 15
/// (which contains ln 512) deliberately empty so the crossover interval
/// spans it.
pub const SMALL_TARGETS: [usize; 10] = [100, 110, 150, 220, 280, 300, 700, 800, 1100, 1800];

/// Token targets of the smoke corpus: twelve short, eight long.
pub const SMOKE_TARGETS: [usize; 20] = [
    95, 100, 120, 140, 160, 180, 200, 230, 260, 290, 310, 330, 600, 700, 900, 1100, 1300, 1500,
    1700, 1900,
];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn gold_for(index: usize) -> Vec<&'static str> {
    (0..4).map(|j| TOPIC_PHRASES[(3 * index + j) % 12]).collect()
}

/// Builds one synthetic document. Every gold phrase is mentioned twice and
/// every filler phrase once in the scannable `covers … in depth` form; one
/// sentence carries the abbreviation pair; padding sentences (7 tokens
/// each) bring the whitespace token count to at least `target_tokens`
/// (overshoot is at most 6).
pub fn synth_document(index: usize, target_tokens: usize) -> Document {
    let id = format!("synth-{index:02}");
    let gold = gold_for(index);
    let mut sentences = vec![
        format!("Document {id} reports a controlled study of extraction methods."),
        format!("We rely on {EXPANSION} ({ABBREVIATION}) to annotate the corpus."),
    ];
    for phrase in &gold {
        sentences.push(format!("The study covers {phrase} in depth."));
        sentences.push(format!("Further analysis covers {phrase} in depth."));
    }
    for filler in FILLER_PHRASES {
        sentences.push(format!("A side note covers {filler} in depth."));
    }
    let mut text = sentences.join(" ");
    let mut count = text.split_whitespace().count();
    while count < target_tokens {
        text.push_str(" Measurements continue across repeated trials and sessions.");
        count += 7;
    }
    let keyphrases = gold
        .iter()
        .map(|s| s.to_string())
        .chain([EXPANSION.to_string()])
        .collect();
    Document {
        id,
        document: text,
        keyphrases,
    }
}

pub fn small_corpus() -> Vec<Document> {
    SMALL_TARGETS
        .iter()
        .enumerate()
        .map(|(i, &target)| synth_document(i, target))
        .collect()
}

pub fn smoke_corpus() -> Vec<Document> {
    SMOKE_TARGETS
        .iter()
        .enumerate()
        .map(|(i, &target)| synth_document(i, target))
        .collect()
}

/// `routing` ⇄ `routings`, `embeddings` ⇄ `embedding`: a stem-equal
/// variant of a phrase, used by the stub to exercise redundancy removal.
pub fn toggle_plural(phrase: &str) -> String {
    match phrase.strip_suffix('s') {
        Some(base) => base.to_string(),
        None => format!("{phrase}s"),
    }
}

/// The text of the prompt section starting with `header`, up to the next
/// blank line.
fn section<'a>(prompt: &'a str, header: &str) -> Option<&'a str> {
    let start = prompt.find(header)? + header.len();
    let rest = &prompt[start..];
    Some(rest.find("\n\n").map_or(rest, |end| &rest[..end]))
}

/// A `- item` bullet list from the prompt section starting with `header`.
fn list_section(prompt: &str, header: &str) -> Vec<String> {
    section(prompt, header)
        .map(|body| {
            body.lines()
                .filter_map(|line| line.strip_prefix("- "))
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default()
}

/// Scans `covers <phrase> in depth` mentions: phrases seen at least twice
/// (gold) and exactly once (filler), each in first-mention order.
fn scan_mentions(document: &str) -> (Vec<String>, Vec<String>) {
    let mut counts: Vec<(String, usize)> = Vec::new();
    let mut rest = document;
    while let Some(at) = rest.find("covers ") {
        let after = &rest[at + "covers ".len()..];
        match after.find(" in depth") {
            Some(end) => {
                let phrase = &after[..end];
                match counts.iter_mut().find(|(p, _)| p == phrase) {
                    Some((_, n)) => *n += 1,
                    None => counts.push((phrase.to_string(), 1)),
                }
                rest = &after[end..];
            }
            None => rest = after,
        }
    }
    let gold = counts
        .iter()
        .filter(|(_, n)| *n >= 2)
        .map(|(p, _)| p.clone())
        .collect();
    let filler = counts
        .iter()
        .filter(|(_, n)| *n == 1)
        .map(|(p, _)| p.clone())
        .collect();
    (gold, filler)
}

fn first_word(phrase: &str) -> &str {
    phrase.split_whitespace().next().unwrap_or(phrase)
}

fn contains_any_word(candidate: &str, words: &[String]) -> bool {
    candidate
        .split_whitespace()
        .any(|w| words.iter().any(|word| word == w))
}

fn json_array(items: &[String]) -> String {
    serde_json::to_string(items).expect("string array serializes")
}

/// The stub model. Pure in (system, user), so record/replay fixtures and
/// repeat runs are byte-stable regardless of concurrency.
pub fn stub_reply(system: &str, user: &str) -> String {
    if system.contains("expert recruiter") {
        return r#"{"role": "a computational bibliometrics expert", "reason": "the mentions repeat in a structured survey pattern"}"#
            .to_string();
    }

    let document = section(user, "Document:\n").unwrap_or("");
    let (gold, filler) = scan_mentions(document);
    let long = document.split_whitespace().count() >= LENGTH_THRESHOLD;

    if system.contains("Identify the main topics") {
        let mut topics: Vec<String> = gold.iter().map(|p| first_word(p).to_string()).collect();
        if long {
            topics.push("latency".to_string());
        }
        return json_array(&topics);
    }

    if system.contains("encyclopedia notes") {
        let candidates = list_section(user, "Candidate keyphrases:\n");
        if long {
            // Knowledge grounding misleads on long documents: filler and a
            // hallucination outrank most of the gold.
            let mislead = vec![
                filler[0].clone(),
                PHANTOM_PHRASE.to_string(),
                gold[3].clone(),
                ABBREVIATION.to_string(),
                gold[0].clone(),
            ];
            return json_array(&mislead);
        }
        // On short documents it works as intended: drop every candidate
        // whose note says there is no entry.
        let absent: Vec<String> = list_section(user, "Encyclopedia notes:\n")
            .iter()
            .filter_map(|line| line.strip_suffix(": (no entry)"))
            .map(str::to_string)
            .collect();
        let kept: Vec<String> = candidates
            .into_iter()
            .filter(|c| !absent.contains(c))
            .collect();
        return json_array(&kept);
    }

    if system.contains("main topics, and candidate keyphrases") {
        let topics = list_section(user, "Main topics:\n");
        let candidates = list_section(user, "Candidate keyphrases:\n");
        // Topic guidance is strong on long documents (every topic usable)
        // and weak on short ones (only the first two register).
        let guide: &[String] = if long {
            &topics
        } else {
            &topics[..topics.len().min(2)]
        };
        let kept: Vec<String> = candidates
            .into_iter()
            .filter(|c| contains_any_word(c, guide))
            .collect();
        return json_array(&kept);
    }

    if system.contains("Extract the most important keyphrases") {
        assert!(
            gold.len() >= 4 && filler.len() >= 2,
            "stub needs synthetic documents (gold {gold:?}, filler {filler:?})",
        );
        let neutral = system.starts_with("You are a text analysis assistant.");
        let list: Vec<String> = if neutral {
            vec![
                filler[0].clone(),
                gold[0].clone(),
                PHANTOM_PHRASE.to_string(),
                gold[1].clone(),
                filler[1].clone(),
                gold[2].clone(),
                ABBREVIATION.to_string(),
                gold[3].clone(),
                toggle_plural(&gold[0]),
            ]
        } else {
            vec![
                gold[0].clone(),
                filler[0].clone(),
                gold[1].clone(),
                gold[2].clone(),
                PHANTOM_PHRASE.to_string(),
                gold[3].clone(),
                ABBREVIATION.to_string(),
                toggle_plural(&gold[1]),
                filler[1].clone(),
            ]
        };
        return json_array(&list);
    }

    panic!("stub received an unrecognized prompt: {system:?}");
}

async fn chat_handler(Json(body): Json<serde_json::Value>) -> impl IntoResponse {
    let system = body["messages"][0]["content"].as_str().unwrap_or("");
    let user = body["messages"][1]["content"].as_str().unwrap_or("");
    let content = stub_reply(system, user);
    Json(json!({
        "choices": [{
            "message": {"role": "assistant", "content": content},
            "finish_reason": "stop",
        }],
        "usage": {"prompt_tokens": 64, "completion_tokens": 16},
    }))
}

async fn wiki_handler(Path(title): Path<String>) -> axum::response::Response {
    if title.contains("zz") || title.contains("phantom") {
        return axum::response::Response::builder()
            .status(404)
            .body("no such page".into())
            .unwrap();
    }
    let display = title.replace('_', " ");
    Json(json!({
        "title": title,
        "type": "standard",
        "extract": format!(
            "{display} is a recurring construct in the synthetic corpus. \
             It anchors one of the fixture documents. A third sentence is trimmed.",
        ),
    }))
    .into_response()
}

/// A stub server plus the runtime keeping it alive; shuts down on drop.
pub struct TestServer {
    pub base_url: String,
    _runtime: tokio::runtime::Runtime,
}

fn serve(router: Router, prefix: &str) -> TestServer {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .expect("stub runtime starts");
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    runtime.spawn(async move {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
            .await
            .expect("stub binds");
        addr_tx
            .send(listener.local_addr().expect("stub has an address"))
            .expect("stub address is received");
        axum::serve(listener, router).await.expect("stub serves");
    });
    let addr = addr_rx.recv().expect("stub reports its address");
    TestServer {
        base_url: format!("http://{addr}{prefix}"),
        _runtime: runtime,
    }
}

/// Chat-completions stub; pass `base_url` as the API base.
pub fn start_chat_stub() -> TestServer {
    serve(
        Router::new().route("/v1/chat/completions", post(chat_handler)),
        "/v1",
    )
}

/// Encyclopedia summary stub; pass `base_url` as the knowledge base URL.
pub fn start_wiki_stub() -> TestServer {
    serve(
        Router::new().route("/api/page/summary/{title}", get(wiki_handler)),
        "/api",
    )
}

/// A chat endpoint that always answers with one status code.
pub fn start_status_stub(status: u16) -> TestServer {
    let handler = move || async move {
        axum::response::Response::builder()
            .status(status)
            .body(axum::body::Body::from("configured failure"))
            .unwrap()
    };
    serve(
        Router::new().route("/v1/chat/completions", post(handler)),
        "/v1",
    )
}

pub struct Exec {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the compiled binary with a scrubbed environment (the tool's own
/// variables never leak in from the host) plus the given overrides.
pub fn mapex(args: &[&str], envs: &[(&str, &str)]) -> Exec {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_mapex"));
    cmd.args(args);
    for var in ["MAPEX_API_BASE", "MAPEX_API_KEY", "MAPEX_MODEL"] {
        cmd.env_remove(var);
    }
    for (key, value) in envs {
        cmd.env(key, value);
    }
    let out = cmd.output().expect("binary runs");
    Exec {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}
