//! External knowledge lookup: Wikipedia page summaries for candidate
//! phrases, with a persistent JSON cache, polite rate limiting, and an
//! offline mode that serves from the cache only (for reproducible replays).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use tokio::time::Instant;

use crate::corpus::Tokenizer;
use crate::gateway::RetryPolicy;
use crate::text::{fold_key, split_sentences};

/// What a lookup produced. `summary` and `source_title` are both present
/// (a page exists, summary holds its first sentences) or both absent (no
/// page, disambiguation page, or empty extract).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikiEntry {
    pub summary: Option<String>,
    pub source_title: Option<String>,
    pub fetched_at: String,
}

impl WikiEntry {
    fn absent(fetched_at: String) -> Self {
        WikiEntry {
            summary: None,
            source_title: None,
            fetched_at,
        }
    }
}

/// Where a lookup result came from, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupSource {
    Cache,
    Fetched,
    /// Offline mode and the phrase was not cached; the entry is absent but
    /// deliberately not cached, so a later online run will fetch it.
    OfflineMiss,
}

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("knowledge lookup transport failure after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: reqwest::Error,
    },
    #[error("knowledge API returned status {status} for {title:?}")]
    Api { status: u16, title: String },
    #[error("knowledge cache at {path}: {reason}")]
    CacheFile { path: PathBuf, reason: String },
    #[error("knowledge client configuration error: {reason}")]
    Config { reason: String },
}

#[derive(Debug, Clone)]
pub struct WikiConfig {
    /// REST API root, e.g. `https://en.wikipedia.org/api/rest_v1`.
    pub base_url: String,
    pub cache_path: Option<PathBuf>,
    /// Serve exclusively from the cache; never touch the network.
    pub offline: bool,
    pub requests_per_second: f64,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl Default for WikiConfig {
    fn default() -> Self {
        WikiConfig {
            base_url: "https://en.wikipedia.org/api/rest_v1".to_string(),
            cache_path: None,
            offline: false,
            requests_per_second: 10.0,
            retry: RetryPolicy {
                max_retries: 2,
                initial_delay_ms: 500,
                backoff_factor: 2.0,
            },
            timeout: Duration::from_secs(20),
        }
    }
}

/// Cache key for a phrase: lowercased, whitespace collapsed, outer
/// punctuation stripped.
pub fn lookup_key(phrase: &str) -> String {
    fold_key(phrase)
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

pub struct WikiClient {
    http: reqwest::Client,
    base_url: String,
    offline: bool,
    retry: RetryPolicy,
    cache: Mutex<BTreeMap<String, WikiEntry>>,
    cache_path: Option<PathBuf>,
    next_slot: Mutex<Instant>,
    min_interval: Duration,
}

impl WikiClient {
    pub fn new(config: WikiConfig) -> Result<Self, KnowledgeError> {
        if config.requests_per_second <= 0.0 {
            return Err(KnowledgeError::Config {
                reason: "requests_per_second must be positive".to_string(),
            });
        }
        let cache = match &config.cache_path {
            Some(path) if path.exists() => {
                let raw =
                    std::fs::read_to_string(path).map_err(|e| KnowledgeError::CacheFile {
                        path: path.clone(),
                        reason: e.to_string(),
                    })?;
                serde_json::from_str(&raw).map_err(|e| KnowledgeError::CacheFile {
                    path: path.clone(),
                    reason: format!("invalid cache JSON: {e}"),
                })?
            }
            _ => BTreeMap::new(),
        };
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .user_agent(concat!(
                "mapex/",
                env!("CARGO_PKG_VERSION"),
                " (keyphrase extraction research tool)"
            ))
            .build()
            .map_err(|e| KnowledgeError::Config {
                reason: format!("failed to build HTTP client: {e}"),
            })?;
        Ok(WikiClient {
            http,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            offline: config.offline,
            retry: config.retry,
            cache: Mutex::new(cache),
            cache_path: config.cache_path,
            next_slot: Mutex::new(Instant::now()),
            min_interval: Duration::from_secs_f64(1.0 / config.requests_per_second),
        })
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock poisoned").len()
    }

    /// Looks up one phrase: cache first, then (unless offline) the summary
    /// endpoint. Missing pages, disambiguation pages, and unusable titles
    /// are negative-cached as absent entries; only transport-level failures
    /// surface as errors.
    pub async fn lookup(&self, phrase: &str) -> Result<(WikiEntry, LookupSource), KnowledgeError> {
        let key = lookup_key(phrase);
        if key.is_empty() {
            return Ok((WikiEntry::absent(now_rfc3339()), LookupSource::Cache));
        }
        if let Some(entry) = self.cache_get(&key) {
            return Ok((entry, LookupSource::Cache));
        }
        if self.offline {
            return Ok((WikiEntry::absent(now_rfc3339()), LookupSource::OfflineMiss));
        }
        let entry = self.fetch_summary(&key).await?;
        self.cache_insert(key, entry.clone())?;
        Ok((entry, LookupSource::Fetched))
    }

    fn cache_get(&self, key: &str) -> Option<WikiEntry> {
        self.cache
            .lock()
            .expect("cache lock poisoned")
            .get(key)
            .cloned()
    }

    fn cache_insert(&self, key: String, entry: WikiEntry) -> Result<(), KnowledgeError> {
        let mut cache = self.cache.lock().expect("cache lock poisoned");
        cache.insert(key, entry);
        if let Some(path) = &self.cache_path {
            let json =
                serde_json::to_string_pretty(&*cache).expect("cache serialization is infallible");
            let tmp = path.with_extension("json.tmp");
            let write_err = |e: std::io::Error| KnowledgeError::CacheFile {
                path: path.clone(),
                reason: e.to_string(),
            };
            std::fs::write(&tmp, json).map_err(write_err)?;
            std::fs::rename(&tmp, path).map_err(write_err)?;
        }
        Ok(())
    }

    /// Global pacing: each call reserves the next free slot on a fixed
    /// cadence, so concurrent lookups cannot exceed the request rate.
    async fn pace(&self) {
        let wake_at = {
            let mut next = self.next_slot.lock().expect("limiter lock poisoned");
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.min_interval;
            slot
        };
        tokio::time::sleep_until(wake_at).await;
    }

    async fn fetch_summary(&self, key: &str) -> Result<WikiEntry, KnowledgeError> {
        let title = key.replace(' ', "_");
        let mut url = format!("{}/page/summary/", self.base_url);
        // Percent-encode the title as a single path segment.
        for (i, part) in title.split('/').enumerate() {
            if i > 0 {
                url.push_str("%2F");
            }
            url.push_str(&urlencode_segment(part));
        }

        let attempts = self.retry.max_retries + 1;
        let mut last_transport: Option<reqwest::Error> = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                tokio::time::sleep(Duration::from_millis(
                    (self.retry.initial_delay_ms as f64
                        * self.retry.backoff_factor.powi(attempt as i32 - 1))
                        as u64,
                ))
                .await;
            }
            self.pace().await;
            match self.http.get(&url).send().await {
                Err(e) => last_transport = Some(e),
                Ok(response) => {
                    let status = response.status();
                    if status.is_server_error() {
                        if attempt + 1 == attempts {
                            return Err(KnowledgeError::Api {
                                status: status.as_u16(),
                                title,
                            });
                        }
                        continue;
                    }
                    // Anything the API refuses (404 missing, 400 bad title)
                    // means "no page for this phrase": a negative entry.
                    if !status.is_success() {
                        return Ok(WikiEntry::absent(now_rfc3339()));
                    }
                    let page: SummaryPage = match response.json().await {
                        Ok(page) => page,
                        Err(_) => return Ok(WikiEntry::absent(now_rfc3339())),
                    };
                    return Ok(entry_from_page(page));
                }
            }
        }
        Err(KnowledgeError::Transport {
            attempts,
            source: last_transport.expect("loop exits early unless transport failed"),
        })
    }
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn urlencode_segment(segment: &str) -> String {
    let mut out = String::with_capacity(segment.len());
    for byte in segment.bytes() {
        match byte {
            b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

#[derive(Debug, Deserialize)]
struct SummaryPage {
    #[serde(default)]
    title: Option<String>,
    #[serde(default, rename = "type")]
    page_type: Option<String>,
    #[serde(default)]
    extract: Option<String>,
}

fn entry_from_page(page: SummaryPage) -> WikiEntry {
    let fetched_at = now_rfc3339();
    if page.page_type.as_deref() == Some("disambiguation") {
        return WikiEntry::absent(fetched_at);
    }
    let extract = page.extract.unwrap_or_default();
    let summary = first_sentences(&extract, 2);
    match (summary.is_empty(), page.title) {
        (false, Some(title)) => WikiEntry {
            summary: Some(summary),
            source_title: Some(title),
            fetched_at,
        },
        // Both present or both absent — never a summary without its source.
        _ => WikiEntry::absent(fetched_at),
    }
}

/// First `n` sentences of an extract, joined with single spaces.
fn first_sentences(text: &str, n: usize) -> String {
    split_sentences(text)
        .into_iter()
        .take(n)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The knowledge dictionary for one document: candidate phrase → entry, in
/// candidate order.
pub type KnowledgeDict = IndexMap<String, WikiEntry>;

/// Builds the knowledge dictionary for a candidate list. Lookup failures do
/// not abort the build: the candidate gets an absent entry and a diagnostic,
/// and the failure is not cached.
pub async fn build_knowledge_dict(
    candidates: &[String],
    client: &WikiClient,
) -> (KnowledgeDict, Vec<String>) {
    let mut dict = KnowledgeDict::new();
    let mut diagnostics = Vec::new();
    let mut offline_misses = 0usize;
    for candidate in candidates {
        if dict.contains_key(candidate) {
            continue;
        }
        match client.lookup(candidate).await {
            Ok((entry, source)) => {
                if source == LookupSource::OfflineMiss {
                    offline_misses += 1;
                }
                dict.insert(candidate.clone(), entry);
            }
            Err(e) => {
                diagnostics.push(format!("knowledge lookup failed for {candidate:?}: {e}"));
                dict.insert(candidate.clone(), WikiEntry::absent(now_rfc3339()));
            }
        }
    }
    if offline_misses > 0 {
        diagnostics.push(format!(
            "knowledge: offline mode, {offline_misses} phrase(s) not in cache"
        ));
    }
    (dict, diagnostics)
}

/// Renders the dictionary as prompt text: one `- phrase: summary` line per
/// candidate (in order), `(no entry)` for absent ones. Entries that would
/// push the text past `budget_tokens` are dropped whole; the count of
/// dropped entries is returned so callers can attach a diagnostic.
pub fn render_knowledge(
    dict: &KnowledgeDict,
    budget_tokens: usize,
    tokenizer: &Tokenizer,
) -> (String, usize) {
    let mut rendered = String::new();
    let mut used_tokens = 0;
    let mut dropped = 0;
    for (phrase, entry) in dict {
        let line = match &entry.summary {
            Some(summary) => format!("- {phrase}: {summary}"),
            None => format!("- {phrase}: (no entry)"),
        };
        let cost = tokenizer.count(&line);
        if used_tokens + cost > budget_tokens {
            dropped += 1;
            continue;
        }
        used_tokens += cost;
        if !rendered.is_empty() {
            rendered.push('\n');
        }
        rendered.push_str(&line);
    }
    (rendered, dropped)
}
