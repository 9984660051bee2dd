//! The three agent operations behind the pipeline: expert recruitment,
//! candidate extraction, and refinement (topic identification plus the two
//! rerank flavors). Each operation is one templated chat call plus response
//! parsing; everything it wants the caller to know beyond the value itself
//! travels as diagnostic strings.

mod templates;

pub use templates::{TemplateError, TemplateSet};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Tokenizer;
use crate::gateway::{
    parse_phrase_list, ChatMessage, ChatRequest, ChatResponse, Gateway, GatewayError,
    ParseStrategy,
};
use crate::text::truncate_tokens;

/// The persona the recruiter chose for a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertRole {
    pub title: String,
    pub rationale: String,
}

/// The persona used when no recruitment happened (the plain baseline).
pub const NEUTRAL_ROLE: &str = "a text analysis assistant";

/// The recruiter's fallback when its response cannot be parsed at all.
pub const FALLBACK_ROLE: &str = "a domain expert";

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub model: String,
    /// Pinned to 0.0 by the pipeline for reproducibility.
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Documents are cut to this many tokens before templating so prompts
    /// fit the model context.
    pub max_doc_tokens: usize,
    /// Refinement output is capped at this many phrases.
    pub rerank_cap: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            model: "gpt-4o-mini".to_string(),
            temperature: 0.0,
            max_output_tokens: 512,
            max_doc_tokens: 6000,
            rerank_cap: 30,
        }
    }
}

/// What refinement is grounded in: the document's topics (long-document
/// route) or rendered encyclopedia notes (short-document route).
#[derive(Debug, Clone, Copy)]
pub enum RerankContext<'a> {
    Topics(&'a [String]),
    Knowledge(&'a str),
}

pub struct AgentRuntime {
    gateway: Arc<Gateway>,
    templates: Arc<TemplateSet>,
    tokenizer: Arc<Tokenizer>,
    config: AgentConfig,
}

impl AgentRuntime {
    pub fn new(
        gateway: Arc<Gateway>,
        templates: Arc<TemplateSet>,
        tokenizer: Arc<Tokenizer>,
        config: AgentConfig,
    ) -> Self {
        AgentRuntime {
            gateway,
            templates,
            tokenizer,
            config,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    /// Asks the recruiter for the expert persona best suited to the
    /// document. Falls back to a generic persona (with a diagnostic) when
    /// the response is unusable — recruitment failure must not sink the
    /// document.
    pub async fn recruit_expert(
        &self,
        document: &str,
    ) -> Result<(ExpertRole, Vec<String>), AgentError> {
        let mut diagnostics = Vec::new();
        let doc = self.prompt_document(document, &mut diagnostics);
        let response = self
            .chat("recruit", &[("document", &doc)], &mut diagnostics)
            .await?;
        let role = match parse_role(&response.content) {
            Some(role) => role,
            None => {
                diagnostics
                    .push("recruit: response had no parseable role, using fallback".to_string());
                ExpertRole {
                    title: FALLBACK_ROLE.to_string(),
                    rationale: "fallback".to_string(),
                }
            }
        };
        Ok((role, diagnostics))
    }

    /// Extracts candidate keyphrases as the given persona (or the neutral
    /// one when none was recruited).
    pub async fn extract_candidates(
        &self,
        document: &str,
        role: Option<&ExpertRole>,
    ) -> Result<(Vec<String>, Vec<String>), AgentError> {
        let mut diagnostics = Vec::new();
        let doc = self.prompt_document(document, &mut diagnostics);
        let role_text = role.map_or(NEUTRAL_ROLE, |r| r.title.as_str());
        let response = self
            .chat(
                "extract",
                &[("document", &doc), ("role", role_text)],
                &mut diagnostics,
            )
            .await?;
        let phrases = self.parse_list("extract", &response.content, &mut diagnostics);
        Ok((phrases, diagnostics))
    }

    /// Names the document's main topics (the long-document route's guide).
    pub async fn identify_topics(
        &self,
        document: &str,
        role: &ExpertRole,
    ) -> Result<(Vec<String>, Vec<String>), AgentError> {
        let mut diagnostics = Vec::new();
        let doc = self.prompt_document(document, &mut diagnostics);
        let response = self
            .chat(
                "topics",
                &[("document", &doc), ("role", &role.title)],
                &mut diagnostics,
            )
            .await?;
        let topics = self.parse_list("topics", &response.content, &mut diagnostics);
        Ok((topics, diagnostics))
    }

    /// Refines the candidate pool grounded in topics or knowledge notes,
    /// returning the reranked list (capped at `rerank_cap`).
    pub async fn rerank(
        &self,
        document: &str,
        role: &ExpertRole,
        candidates: &[String],
        context: RerankContext<'_>,
    ) -> Result<(Vec<String>, Vec<String>), AgentError> {
        let mut diagnostics = Vec::new();
        let doc = self.prompt_document(document, &mut diagnostics);
        let candidate_lines = bullet_lines(candidates);
        let (op, context_name, context_text) = match context {
            RerankContext::Topics(topics) => ("rerank_topic", "topics", bullet_lines(topics)),
            RerankContext::Knowledge(notes) => {
                ("rerank_knowledge", "knowledge", notes.to_string())
            }
        };
        let response = self
            .chat(
                op,
                &[
                    ("document", &doc),
                    ("role", &role.title),
                    ("candidates", &candidate_lines),
                    (context_name, &context_text),
                ],
                &mut diagnostics,
            )
            .await?;
        let mut phrases = self.parse_list(op, &response.content, &mut diagnostics);
        if phrases.len() > self.config.rerank_cap {
            diagnostics.push(format!(
                "{op}: output capped at {} of {} phrases",
                self.config.rerank_cap,
                phrases.len(),
            ));
            phrases.truncate(self.config.rerank_cap);
        }
        Ok((phrases, diagnostics))
    }

    /// The document as it goes into prompts: token-truncated when too long.
    fn prompt_document(&self, document: &str, diagnostics: &mut Vec<String>) -> String {
        let truncated = truncate_tokens(document, self.config.max_doc_tokens);
        if truncated.len() < document.len() {
            diagnostics.push(format!(
                "document truncated to {} tokens for prompting",
                self.config.max_doc_tokens,
            ));
        }
        truncated.to_string()
    }

    async fn chat(
        &self,
        op: &str,
        values: &[(&str, &str)],
        diagnostics: &mut Vec<String>,
    ) -> Result<ChatResponse, AgentError> {
        let (system, user) = self.templates.render(op, values)?;
        let request = ChatRequest {
            model: self.config.model.clone(),
            messages: vec![ChatMessage::system(system), ChatMessage::user(user)],
            temperature: self.config.temperature,
            max_output_tokens: self.config.max_output_tokens,
        };
        let response = self.gateway.complete(&request).await?;
        if response.finish_reason == "length" {
            diagnostics.push(format!(
                "{op}: response hit the {}-token output limit",
                self.config.max_output_tokens,
            ));
        }
        Ok(response)
    }

    fn parse_list(&self, op: &str, content: &str, diagnostics: &mut Vec<String>) -> Vec<String> {
        let parsed = parse_phrase_list(content);
        match parsed.strategy {
            ParseStrategy::Unparsed => {
                diagnostics.push(format!("{op}: response was unparseable, empty list"));
            }
            ParseStrategy::RawLines => {
                diagnostics.push(format!("{op}: low-confidence parse (raw lines)"));
            }
            _ => {}
        }
        parsed.phrases
    }
}

fn bullet_lines(items: &[String]) -> String {
    let mut out = String::new();
    for item in items {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("- ");
        out.push_str(item);
    }
    out
}

/// Parses the recruiter's response: a JSON object with `role`/`reason`
/// (possibly fenced or embedded in prose), else a quoted `"role": "..."`
/// fragment, else the first quoted string on the first line.
fn parse_role(content: &str) -> Option<ExpertRole> {
    let trimmed = content.trim();
    if trimmed.is_empty() {
        return None;
    }
    for candidate in json_object_candidates(trimmed) {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(candidate) {
            if let Some(title) = value.get("role").and_then(|v| v.as_str()) {
                let title = title.trim();
                if !title.is_empty() {
                    return Some(ExpertRole {
                        title: title.to_string(),
                        rationale: value
                            .get("reason")
                            .and_then(|v| v.as_str())
                            .unwrap_or("")
                            .trim()
                            .to_string(),
                    });
                }
            }
        }
    }
    // `"role": "an astrophysicist"` somewhere in prose.
    if let Some(pos) = trimmed.find("\"role\"") {
        let after = &trimmed[pos + "\"role\"".len()..];
        if let Some(colon) = after.find(':') {
            if let Some(title) = first_quoted(&after[colon + 1..]) {
                return Some(ExpertRole {
                    title: title.to_string(),
                    rationale: String::new(),
                });
            }
        }
    }
    // A quoted persona on the first line: `An "algorithms researcher" ...`.
    // Structured responses were handled above; if this one is JSON-shaped
    // but had no usable role, the first quoted string would just be some
    // other key, so give up instead.
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return None;
    }
    let first_line = trimmed.lines().next().unwrap_or("");
    if let Some(title) = first_quoted(first_line) {
        return Some(ExpertRole {
            title: title.to_string(),
            rationale: String::new(),
        });
    }
    None
}

/// JSON-object parse attempts, outermost first: the whole content, the first
/// fenced block, the outermost braced substring.
fn json_object_candidates(content: &str) -> Vec<&str> {
    let mut candidates = vec![content];
    if let Some(open) = content.find("```") {
        let after = &content[open + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after[body_start..];
        if let Some(close) = body.find("```") {
            candidates.push(body[..close].trim());
        }
    }
    if let (Some(start), Some(end)) = (content.find('{'), content.rfind('}')) {
        if start < end {
            candidates.push(&content[start..=end]);
        }
    }
    candidates
}

fn first_quoted(text: &str) -> Option<&str> {
    let start = text.find('"')?;
    let rest = &text[start + 1..];
    let end = rest.find('"')?;
    let inner = rest[..end].trim();
    (!inner.is_empty()).then_some(inner)
}
