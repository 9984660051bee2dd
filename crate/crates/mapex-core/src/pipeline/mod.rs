//! Pipeline orchestration: which agents run for which variant, routing by
//! document length, parallel corpus execution, and run artifacts (results
//! jsonl + manifest).

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::agents::{AgentError, AgentRuntime, ExpertRole, RerankContext};
use crate::corpus::Document;
use crate::gateway::{CassetteMode, GatewayStats};
use crate::knowledge::{build_knowledge_dict, render_knowledge, KnowledgeDict, WikiClient};
use crate::postprocess::post_process;

/// Pipeline variants: the full dual-path pipeline plus the ablation stages
/// leading up to it. Every variant runs on all documents; only `full`
/// routes by length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// One extraction call with a neutral persona.
    Base,
    /// Recruit an expert persona, then extract as that persona.
    ExpertRole,
    /// Recruited extraction refined by the document's topics.
    Topic,
    /// `topic` plus post-processing.
    TopicPost,
    /// Recruited extraction refined by encyclopedia notes.
    Knowledge,
    /// `knowledge` plus post-processing.
    KnowledgePost,
    /// Length-routed: short documents take the knowledge path, long ones
    /// the topic path; both end with post-processing.
    Full,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Base,
        Variant::ExpertRole,
        Variant::Topic,
        Variant::TopicPost,
        Variant::Knowledge,
        Variant::KnowledgePost,
        Variant::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::ExpertRole => "expert_role",
            Variant::Topic => "topic",
            Variant::TopicPost => "topic_post",
            Variant::Knowledge => "knowledge",
            Variant::KnowledgePost => "knowledge_post",
            Variant::Full => "full",
        }
    }

    /// Whether this variant can consult the knowledge client.
    pub fn uses_knowledge(self) -> bool {
        matches!(
            self,
            Variant::Knowledge | Variant::KnowledgePost | Variant::Full
        )
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| PipelineError::UnknownVariant { name: s.to_string() })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("unknown variant {name:?} (expected one of: base, expert_role, topic, topic_post, knowledge, knowledge_post, full)")]
    UnknownVariant { name: String },
    #[error("failed to write {path}: {reason}")]
    Write { path: String, reason: String },
}

/// Which way a document went — `n/a` for every variant except `full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteTaken {
    #[serde(rename = "short")]
    Short,
    #[serde(rename = "long")]
    Long,
    #[serde(rename = "n/a")]
    NotApplicable,
}

/// Long iff the token count reaches the threshold; exactly-at-threshold
/// routes long.
pub fn is_long(token_count: usize, threshold_tokens: usize) -> bool {
    token_count >= threshold_tokens
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub variant: Variant,
    /// Documents with at least this many tokens take the long route.
    pub length_threshold_tokens: usize,
    /// Cutoffs evaluation reports scores at.
    pub k_values: Vec<usize>,
    /// Maximum documents processed concurrently.
    pub worker_limit: usize,
    /// Token budget for rendered encyclopedia notes in rerank prompts.
    pub knowledge_budget_tokens: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            variant: Variant::Full,
            length_threshold_tokens: 512,
            k_values: vec![5, 10, 15],
            worker_limit: 4,
            knowledge_budget_tokens: 1200,
        }
    }
}

/// Everything a run needs: the agent runtime (gateway, templates,
/// tokenizer), the optional knowledge client, and the run configuration.
pub struct PipelineContext {
    pub agents: AgentRuntime,
    pub wiki: Option<Arc<WikiClient>>,
    pub config: PipelineConfig,
}

/// Per-document output. Serialized one per line in the results file; field
/// order is part of the format. No timestamps — byte-identical reruns are a
/// feature (timestamps live in the manifest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub doc_id: String,
    pub variant: Variant,
    pub route_taken: RouteTaken,
    pub role: Option<ExpertRole>,
    pub candidates: Vec<String>,
    pub topics: Option<Vec<String>>,
    /// Candidates that had an encyclopedia entry, when knowledge was used.
    pub knowledge_keys: Option<Vec<String>>,
    /// The refined (or raw, for variants without refinement) list before
    /// post-processing.
    pub preliminary: Vec<String>,
    #[serde(rename = "final")]
    pub final_phrases: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl ExtractionResult {
    fn skeleton(doc_id: String, variant: Variant) -> Self {
        ExtractionResult {
            doc_id,
            variant,
            route_taken: RouteTaken::NotApplicable,
            role: None,
            candidates: Vec::new(),
            topics: None,
            knowledge_keys: None,
            preliminary: Vec::new(),
            final_phrases: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    /// True when an unrecoverable per-document error emptied the output.
    pub fn failed(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.starts_with(PIPELINE_ERROR_PREFIX))
    }
}

const PIPELINE_ERROR_PREFIX: &str = "pipeline error:";

/// Runs one document through the configured variant. Never fails: an
/// unrecoverable agent error yields a result with empty `final`, partial
/// intermediate fields, and a `pipeline error:` diagnostic, so a corpus run
/// carries on past bad documents.
pub async fn run_document(doc: &Document, ctx: &PipelineContext) -> ExtractionResult {
    let mut result = ExtractionResult::skeleton(doc.id.clone(), ctx.config.variant);
    let outcome = run_variant(doc, ctx, &mut result).await;
    if let Err(e) = outcome {
        result.final_phrases.clear();
        result
            .diagnostics
            .push(format!("{PIPELINE_ERROR_PREFIX} {e}"));
    }
    result
}

async fn run_variant(
    doc: &Document,
    ctx: &PipelineContext,
    result: &mut ExtractionResult,
) -> Result<(), AgentError> {
    match ctx.config.variant {
        Variant::Base => {
            let (candidates, diags) = ctx.agents.extract_candidates(&doc.document, None).await?;
            result.diagnostics.extend(diags);
            result.candidates = candidates;
            result.preliminary = result.candidates.clone();
            result.final_phrases = result.preliminary.clone();
        }
        Variant::ExpertRole => {
            let role = recruit(doc, ctx, result).await?;
            extract(doc, ctx, result, &role).await?;
            result.preliminary = result.candidates.clone();
            result.final_phrases = result.preliminary.clone();
        }
        Variant::Topic => {
            let role = recruit(doc, ctx, result).await?;
            extract(doc, ctx, result, &role).await?;
            topic_refine(doc, ctx, result, &role).await?;
            result.final_phrases = result.preliminary.clone();
        }
        Variant::TopicPost => {
            let role = recruit(doc, ctx, result).await?;
            extract(doc, ctx, result, &role).await?;
            topic_refine(doc, ctx, result, &role).await?;
            apply_post_process(doc, result);
        }
        Variant::Knowledge => {
            let role = recruit(doc, ctx, result).await?;
            extract(doc, ctx, result, &role).await?;
            knowledge_refine(doc, ctx, result, &role).await?;
            result.final_phrases = result.preliminary.clone();
        }
        Variant::KnowledgePost => {
            let role = recruit(doc, ctx, result).await?;
            extract(doc, ctx, result, &role).await?;
            knowledge_refine(doc, ctx, result, &role).await?;
            apply_post_process(doc, result);
        }
        Variant::Full => {
            let token_count = ctx.agents.tokenizer().count(&doc.document);
            let long = is_long(token_count, ctx.config.length_threshold_tokens);
            result.route_taken = if long {
                RouteTaken::Long
            } else {
                RouteTaken::Short
            };
            let role = recruit(doc, ctx, result).await?;
            extract(doc, ctx, result, &role).await?;
            if long {
                topic_refine(doc, ctx, result, &role).await?;
            } else {
                knowledge_refine(doc, ctx, result, &role).await?;
            }
            apply_post_process(doc, result);
        }
    }
    Ok(())
}

async fn recruit(
    doc: &Document,
    ctx: &PipelineContext,
    result: &mut ExtractionResult,
) -> Result<ExpertRole, AgentError> {
    let (role, diags) = ctx.agents.recruit_expert(&doc.document).await?;
    result.diagnostics.extend(diags);
    result.role = Some(role.clone());
    Ok(role)
}

async fn extract(
    doc: &Document,
    ctx: &PipelineContext,
    result: &mut ExtractionResult,
    role: &ExpertRole,
) -> Result<(), AgentError> {
    let (candidates, diags) = ctx
        .agents
        .extract_candidates(&doc.document, Some(role))
        .await?;
    result.diagnostics.extend(diags);
    result.candidates = candidates;
    Ok(())
}

async fn topic_refine(
    doc: &Document,
    ctx: &PipelineContext,
    result: &mut ExtractionResult,
    role: &ExpertRole,
) -> Result<(), AgentError> {
    let (topics, diags) = ctx.agents.identify_topics(&doc.document, role).await?;
    result.diagnostics.extend(diags);
    result.topics = Some(topics.clone());
    let (reranked, diags) = ctx
        .agents
        .rerank(
            &doc.document,
            role,
            &result.candidates,
            RerankContext::Topics(&topics),
        )
        .await?;
    result.diagnostics.extend(diags);
    result.preliminary = reranked;
    Ok(())
}

async fn knowledge_refine(
    doc: &Document,
    ctx: &PipelineContext,
    result: &mut ExtractionResult,
    role: &ExpertRole,
) -> Result<(), AgentError> {
    let dict = match &ctx.wiki {
        Some(wiki) => {
            let (dict, diags) = build_knowledge_dict(&result.candidates, wiki).await;
            result.diagnostics.extend(diags);
            dict
        }
        None => {
            // Degraded mode: refine with explicit no-entry notes rather than
            // failing the document.
            result
                .diagnostics
                .push("knowledge client unavailable, refining without entries".to_string());
            KnowledgeDict::new()
        }
    };
    result.knowledge_keys = Some(
        dict.iter()
            .filter(|(_, entry)| entry.summary.is_some())
            .map(|(phrase, _)| phrase.clone())
            .collect(),
    );
    let (notes, dropped) = render_knowledge(
        &dict,
        ctx.config.knowledge_budget_tokens,
        ctx.agents.tokenizer(),
    );
    if dropped > 0 {
        result.diagnostics.push(format!(
            "knowledge: {dropped} note(s) dropped to fit the {}-token budget",
            ctx.config.knowledge_budget_tokens,
        ));
    }
    let (reranked, diags) = ctx
        .agents
        .rerank(
            &doc.document,
            role,
            &result.candidates,
            RerankContext::Knowledge(&notes),
        )
        .await?;
    result.diagnostics.extend(diags);
    result.preliminary = reranked;
    Ok(())
}

fn apply_post_process(doc: &Document, result: &mut ExtractionResult) {
    let report = post_process(&result.preliminary, &doc.document);
    for (count, what) in [
        (report.dropped_redundant, "redundant phrase(s)"),
        (report.dropped_paired, "abbreviation pair duplicate(s)"),
        (report.dropped_absent, "absent phrase(s)"),
    ] {
        if count > 0 {
            result
                .diagnostics
                .push(format!("post-process: dropped {count} {what}"));
        }
    }
    if report.rewritten_abbreviations > 0 {
        result.diagnostics.push(format!(
            "post-process: rewrote {} abbreviation(s)",
            report.rewritten_abbreviations,
        ));
    }
    result.final_phrases = report.phrases;
}

/// A whole corpus run: results in corpus order plus the failure count.
#[derive(Debug)]
pub struct RunOutput {
    pub results: Vec<ExtractionResult>,
    pub failures: usize,
}

/// Runs every document with at most `worker_limit` in flight, preserving
/// corpus order in the output regardless of completion order.
pub async fn run_corpus(docs: &[Document], ctx: &PipelineContext) -> RunOutput {
    let limit = ctx.config.worker_limit.max(1);
    let results: Vec<ExtractionResult> = stream::iter(docs.iter().map(|doc| run_document(doc, ctx)))
        .buffered(limit)
        .collect()
        .await;
    let failures = results.iter().filter(|r| r.failed()).count();
    RunOutput { results, failures }
}

/// Current time in RFC 3339, second precision — the manifest timestamp
/// format.
pub fn now_rfc3339() -> String {
    chrono::Utc::now()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Run provenance, written next to the results file. This is where
/// timestamps and environment details live so the results themselves can
/// stay byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub variant: Variant,
    pub model: String,
    pub template_set: String,
    pub length_threshold_tokens: usize,
    pub worker_limit: usize,
    pub corpus_path: String,
    pub corpus_sha256: String,
    pub doc_count: usize,
    pub failures: usize,
    pub cassette: Option<CassetteManifest>,
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteManifest {
    pub path: String,
    pub mode: CassetteMode,
    pub replay_hits: u64,
    pub replay_misses: u64,
    pub recorded: u64,
    pub forwarded: u64,
}

impl CassetteManifest {
    pub fn new(path: String, mode: CassetteMode, stats: GatewayStats) -> Self {
        CassetteManifest {
            path,
            mode,
            replay_hits: stats.replay_hits,
            replay_misses: stats.replay_misses,
            recorded: stats.recorded,
            forwarded: stats.forwarded,
        }
    }
}

/// Writes results as jsonl, one document per line, in corpus order.
pub fn write_results(path: &Path, results: &[ExtractionResult]) -> Result<(), PipelineError> {
    let mut out = String::new();
    for result in results {
        out.push_str(
            &serde_json::to_string(result).expect("result serialization is infallible"),
        );
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| PipelineError::Write {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Reads a results file written by [`write_results`].
pub fn read_results(path: &Path) -> Result<Vec<ExtractionResult>, PipelineError> {
    let raw = std::fs::read_to_string(path).map_err(|e| PipelineError::Write {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut results = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let result: ExtractionResult =
            serde_json::from_str(line).map_err(|e| PipelineError::Write {
                path: format!("{}:{}", path.display(), idx + 1),
                reason: e.to_string(),
            })?;
        results.push(result);
    }
    Ok(results)
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), PipelineError> {
    let json =
        serde_json::to_string_pretty(manifest).expect("manifest serialization is infallible");
    std::fs::write(path, json).map_err(|e| PipelineError::Write {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}
