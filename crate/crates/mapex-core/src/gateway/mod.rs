//! LLM gateway: an OpenAI-compatible chat-completions client with retries
//! and a record/replay cassette layer.
//!
//! Every request is fingerprinted (sha256 over its canonical JSON). In
//! `record` mode live responses are persisted under that fingerprint; in
//! `replay` mode responses come exclusively from the cassette — no network —
//! so whole pipeline runs are reproducible byte-for-byte. `passthrough`
//! skips the cassette entirely.

mod cassette;
mod parse;

pub use cassette::Cassette;
pub use parse::{parse_phrase_list, ParseStrategy, ParsedPhrases};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One chat message; `role` is `"system"` or `"user"` everywhere in this
/// pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".to_string(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".to_string(),
            content: content.into(),
        }
    }
}

/// A chat-completions request. Serializes to the OpenAI wire format
/// (`max_output_tokens` travels as `max_tokens`); the same serialization is
/// the canonical form the cassette fingerprint hashes, so field order here
/// is load-bearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(rename = "max_tokens")]
    pub max_output_tokens: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
}

/// What a completion came back with — also the cassette entry format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: String,
    pub usage: Usage,
}

/// sha256 (hex) over the request's canonical JSON. This is the cassette key.
pub fn fingerprint(request: &ChatRequest) -> String {
    let canonical = serde_json::to_string(request).expect("request serialization is infallible");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    crate::text::hex_lower(&hasher.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CassetteMode {
    Record,
    Replay,
    Passthrough,
}

impl fmt::Display for CassetteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CassetteMode::Record => "record",
            CassetteMode::Replay => "replay",
            CassetteMode::Passthrough => "passthrough",
        })
    }
}

impl FromStr for CassetteMode {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record" => Ok(CassetteMode::Record),
            "replay" => Ok(CassetteMode::Replay),
            "passthrough" => Ok(CassetteMode::Passthrough),
            other => Err(GatewayError::Config {
                reason: format!(
                    "unknown cassette mode {other:?} (expected record, replay, or passthrough)"
                ),
            }),
        }
    }
}

/// Retry schedule for live requests: `max_retries` additional attempts after
/// the first, with exponential backoff. Only transport failures and 5xx
/// responses are retried; 4xx is permanent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_delay_ms: u64,
    pub backoff_factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            initial_delay_ms: 1000,
            backoff_factor: 2.0,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, retry_index: u32) -> Duration {
        let ms = self.initial_delay_ms as f64 * self.backoff_factor.powi(retry_index as i32);
        Duration::from_millis(ms as u64)
    }
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// e.g. `https://api.example.com/v1`; the client posts to
    /// `<base_url>/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub mode: CassetteMode,
    pub cassette_path: Option<PathBuf>,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            base_url: "http://127.0.0.1:8080/v1".to_string(),
            api_key: None,
            mode: CassetteMode::Passthrough,
            cassette_path: None,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("cassette replay miss for request fingerprint {fingerprint}")]
    CassetteMiss { fingerprint: String },
    #[error("transport failure after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: reqwest::Error,
    },
    #[error("API returned status {status}: {message}")]
    Api { status: u16, message: String },
    #[error("malformed API response: {reason}")]
    MalformedResponse { reason: String },
    #[error("cassette at {path}: {reason}")]
    CassetteFile { path: PathBuf, reason: String },
    #[error("gateway configuration error: {reason}")]
    Config { reason: String },
}

/// Live counters for a gateway's lifetime, snapshotted into run manifests.
#[derive(Debug, Default)]
struct Counters {
    replay_hits: AtomicU64,
    replay_misses: AtomicU64,
    recorded: AtomicU64,
    forwarded: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub replay_hits: u64,
    pub replay_misses: u64,
    pub recorded: u64,
    pub forwarded: u64,
}

pub struct Gateway {
    http: reqwest::Client,
    completions_url: String,
    api_key: Option<String>,
    mode: CassetteMode,
    cassette: Option<Cassette>,
    retry: RetryPolicy,
    counters: Counters,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        let base = config.base_url.trim_end_matches('/');
        let completions_url = format!("{base}/chat/completions");
        url::Url::parse(&completions_url).map_err(|e| GatewayError::Config {
            reason: format!("invalid base URL {:?}: {e}", config.base_url),
        })?;

        let cassette = match (config.mode, &config.cassette_path) {
            (CassetteMode::Passthrough, _) => None,
            (CassetteMode::Record, Some(path)) => Some(Cassette::open_or_new(path)?),
            (CassetteMode::Replay, Some(path)) => Some(Cassette::open(path)?),
            (mode, None) => {
                return Err(GatewayError::Config {
                    reason: format!("cassette mode {mode} requires a cassette path"),
                })
            }
        };

        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .user_agent(concat!("mapex/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| GatewayError::Config {
                reason: format!("failed to build HTTP client: {e}"),
            })?;

        Ok(Gateway {
            http,
            completions_url,
            api_key: config.api_key,
            mode: config.mode,
            cassette,
            retry: config.retry,
            counters: Counters::default(),
        })
    }

    pub fn mode(&self) -> CassetteMode {
        self.mode
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            replay_hits: self.counters.replay_hits.load(Ordering::Relaxed),
            replay_misses: self.counters.replay_misses.load(Ordering::Relaxed),
            recorded: self.counters.recorded.load(Ordering::Relaxed),
            forwarded: self.counters.forwarded.load(Ordering::Relaxed),
        }
    }

    /// Completes a chat request according to the cassette mode: replay never
    /// touches the network, record always forwards and persists, passthrough
    /// just forwards.
    pub async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        match self.mode {
            CassetteMode::Replay => {
                let fp = fingerprint(request);
                let cassette = self.cassette.as_ref().expect("replay mode has a cassette");
                match cassette.get(&fp) {
                    Some(response) => {
                        self.counters.replay_hits.fetch_add(1, Ordering::Relaxed);
                        Ok(response)
                    }
                    None => {
                        self.counters.replay_misses.fetch_add(1, Ordering::Relaxed);
                        Err(GatewayError::CassetteMiss { fingerprint: fp })
                    }
                }
            }
            CassetteMode::Record => {
                let response = self.forward(request).await?;
                let fp = fingerprint(request);
                let cassette = self.cassette.as_ref().expect("record mode has a cassette");
                cassette.insert_and_persist(fp, response.clone())?;
                self.counters.recorded.fetch_add(1, Ordering::Relaxed);
                Ok(response)
            }
            CassetteMode::Passthrough => self.forward(request).await,
        }
    }

    async fn forward(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let attempts = self.retry.max_retries + 1;
        let mut last_transport: Option<reqwest::Error> = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                tokio::time::sleep(self.retry.delay(attempt - 1)).await;
            }
            let mut builder = self.http.post(&self.completions_url).json(request);
            if let Some(key) = &self.api_key {
                builder = builder.bearer_auth(key);
            }
            match builder.send().await {
                Err(e) => last_transport = Some(e),
                Ok(response) => {
                    let status = response.status();
                    if status.is_server_error() {
                        let message = body_snippet(response).await;
                        if attempt + 1 == attempts {
                            return Err(GatewayError::Api {
                                status: status.as_u16(),
                                message,
                            });
                        }
                        continue;
                    }
                    if !status.is_success() {
                        return Err(GatewayError::Api {
                            status: status.as_u16(),
                            message: body_snippet(response).await,
                        });
                    }
                    self.counters.forwarded.fetch_add(1, Ordering::Relaxed);
                    let wire: WireResponse =
                        response
                            .json()
                            .await
                            .map_err(|e| GatewayError::MalformedResponse {
                                reason: e.to_string(),
                            })?;
                    return wire.try_into();
                }
            }
        }
        Err(GatewayError::Transport {
            attempts,
            source: last_transport.expect("loop exits early unless transport failed"),
        })
    }
}

async fn body_snippet(response: reqwest::Response) -> String {
    const LIMIT: usize = 300;
    match response.text().await {
        Ok(body) => {
            let trimmed = body.trim();
            let mut end = trimmed.len().min(LIMIT);
            while !trimmed.is_char_boundary(end) {
                end -= 1;
            }
            trimmed[..end].to_string()
        }
        Err(_) => "<unreadable body>".to_string(),
    }
}

/// OpenAI chat-completions wire shapes (the subset this pipeline reads).
#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

impl TryFrom<WireResponse> for ChatResponse {
    type Error = GatewayError;

    fn try_from(wire: WireResponse) -> Result<Self, Self::Error> {
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or(GatewayError::MalformedResponse {
                reason: "response has no choices".to_string(),
            })?;
        Ok(ChatResponse {
            content: choice.message.content.unwrap_or_default(),
            finish_reason: choice.finish_reason.unwrap_or_else(|| "stop".to_string()),
            usage: wire.usage.unwrap_or_default(),
        })
    }
}
