//! Layered run settings. Precedence, highest first: command-line flags,
//! environment variables (`MAPEX_API_BASE`, `MAPEX_API_KEY`,
//! `MAPEX_MODEL`), the optional TOML config file, built-in defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use mapex_core::agents::{AgentConfig, AgentRuntime, TemplateSet};
use mapex_core::corpus::Tokenizer;
use mapex_core::gateway::{CassetteMode, Gateway, GatewayConfig};
use mapex_core::knowledge::{WikiClient, WikiConfig};
use mapex_core::pipeline::{PipelineConfig, PipelineContext, Variant};

use crate::cli::PipelineFlags;
use crate::errors::CliError;

pub const ENV_API_BASE: &str = "MAPEX_API_BASE";
pub const ENV_API_KEY: &str = "MAPEX_API_KEY";
pub const ENV_MODEL: &str = "MAPEX_MODEL";

/// The config file: every field optional, unknown keys rejected so typos
/// surface instead of silently falling back to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub api_base: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    /// `"builtin"` or a directory of prompt templates.
    pub template_set: Option<String>,
    pub variant: Option<String>,
    pub length_threshold_tokens: Option<usize>,
    pub k_values: Option<Vec<usize>>,
    pub worker_limit: Option<usize>,
    pub knowledge_budget_tokens: Option<usize>,
    pub bin_width: Option<f64>,
    pub cassette: Option<PathBuf>,
    pub cassette_mode: Option<String>,
    pub wiki_cache: Option<PathBuf>,
    pub wiki_base: Option<String>,
    pub offline: Option<bool>,
    pub vocab: Option<PathBuf>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub max_doc_tokens: Option<usize>,
    pub rerank_cap: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let raw = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&raw)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for a run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub api_base: String,
    pub api_key: Option<String>,
    pub model: String,
    pub template_set: String,
    pub variant: Variant,
    pub length_threshold_tokens: usize,
    pub k_values: Vec<usize>,
    pub worker_limit: usize,
    pub knowledge_budget_tokens: usize,
    pub cassette: Option<PathBuf>,
    pub cassette_mode: CassetteMode,
    pub wiki_cache: Option<PathBuf>,
    pub wiki_base: String,
    pub offline: bool,
    pub vocab: Option<PathBuf>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub max_doc_tokens: usize,
    pub rerank_cap: usize,
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

impl Settings {
    pub fn resolve(file: &FileConfig, flags: &PipelineFlags) -> Result<Settings, CliError> {
        let pipeline_defaults = PipelineConfig::default();
        let agent_defaults = AgentConfig::default();
        let wiki_defaults = WikiConfig::default();
        let gateway_defaults = GatewayConfig::default();

        let variant_name = flags
            .variant
            .clone()
            .or_else(|| file.variant.clone())
            .unwrap_or_else(|| pipeline_defaults.variant.name().to_string());
        let variant: Variant = variant_name.parse()?;

        let cassette_mode_name = flags
            .cassette_mode
            .clone()
            .or_else(|| file.cassette_mode.clone())
            .unwrap_or_else(|| CassetteMode::Passthrough.to_string());
        let cassette_mode: CassetteMode = cassette_mode_name.parse()?;

        Ok(Settings {
            api_base: flags
                .api_base
                .clone()
                .or_else(|| env_var(ENV_API_BASE))
                .or_else(|| file.api_base.clone())
                .unwrap_or(gateway_defaults.base_url),
            api_key: env_var(ENV_API_KEY).or_else(|| file.api_key.clone()),
            model: flags
                .model
                .clone()
                .or_else(|| env_var(ENV_MODEL))
                .or_else(|| file.model.clone())
                .unwrap_or(agent_defaults.model),
            template_set: flags
                .template_set
                .clone()
                .or_else(|| file.template_set.clone())
                .unwrap_or_else(|| "builtin".to_string()),
            variant,
            length_threshold_tokens: flags
                .threshold
                .or(file.length_threshold_tokens)
                .unwrap_or(pipeline_defaults.length_threshold_tokens),
            k_values: flags
                .k
                .clone()
                .map(parse_k_values)
                .transpose()?
                .or_else(|| file.k_values.clone())
                .unwrap_or(pipeline_defaults.k_values),
            worker_limit: flags
                .workers
                .or(file.worker_limit)
                .unwrap_or(pipeline_defaults.worker_limit),
            knowledge_budget_tokens: file
                .knowledge_budget_tokens
                .unwrap_or(pipeline_defaults.knowledge_budget_tokens),
            cassette: flags.cassette.clone().or_else(|| file.cassette.clone()),
            cassette_mode,
            wiki_cache: flags
                .wiki_cache
                .clone()
                .or_else(|| file.wiki_cache.clone()),
            wiki_base: file
                .wiki_base
                .clone()
                .unwrap_or(wiki_defaults.base_url),
            offline: flags.offline || file.offline.unwrap_or(false),
            vocab: flags.vocab.clone().or_else(|| file.vocab.clone()),
            temperature: file.temperature.unwrap_or(agent_defaults.temperature),
            max_output_tokens: file
                .max_output_tokens
                .unwrap_or(agent_defaults.max_output_tokens),
            max_doc_tokens: file.max_doc_tokens.unwrap_or(agent_defaults.max_doc_tokens),
            rerank_cap: file.rerank_cap.unwrap_or(agent_defaults.rerank_cap),
        })
    }

    pub fn tokenizer(&self) -> Result<Tokenizer, CliError> {
        match &self.vocab {
            Some(path) => Ok(Tokenizer::from_vocab_file(path)?),
            None => Ok(Tokenizer::Whitespace),
        }
    }

    pub fn templates(&self) -> Result<TemplateSet, CliError> {
        if self.template_set == "builtin" {
            Ok(TemplateSet::builtin())
        } else {
            Ok(TemplateSet::load_dir(Path::new(&self.template_set))?)
        }
    }

    pub fn gateway(&self) -> Result<Gateway, CliError> {
        Ok(Gateway::new(GatewayConfig {
            base_url: self.api_base.clone(),
            api_key: self.api_key.clone(),
            mode: self.cassette_mode,
            cassette_path: self.cassette.clone(),
            ..GatewayConfig::default()
        })?)
    }

    pub fn wiki(&self) -> Result<Option<Arc<WikiClient>>, CliError> {
        if !self.variant.uses_knowledge() {
            return Ok(None);
        }
        let client = WikiClient::new(WikiConfig {
            base_url: self.wiki_base.clone(),
            cache_path: self.wiki_cache.clone(),
            offline: self.offline,
            ..WikiConfig::default()
        })?;
        Ok(Some(Arc::new(client)))
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            variant: self.variant,
            length_threshold_tokens: self.length_threshold_tokens,
            k_values: self.k_values.clone(),
            worker_limit: self.worker_limit,
            knowledge_budget_tokens: self.knowledge_budget_tokens,
        }
    }

    /// Builds the full pipeline context. `variant` is already baked into
    /// the settings; ablation callers override it per run via
    /// [`Settings::with_variant`].
    pub fn pipeline_context(&self) -> Result<PipelineContext, CliError> {
        let gateway = Arc::new(self.gateway()?);
        let templates = Arc::new(self.templates()?);
        let tokenizer = Arc::new(self.tokenizer()?);
        let agents = AgentRuntime::new(
            gateway,
            templates,
            tokenizer,
            AgentConfig {
                model: self.model.clone(),
                temperature: self.temperature,
                max_output_tokens: self.max_output_tokens,
                max_doc_tokens: self.max_doc_tokens,
                rerank_cap: self.rerank_cap,
            },
        );
        Ok(PipelineContext {
            agents,
            wiki: self.wiki()?,
            config: self.pipeline_config(),
        })
    }

    pub fn with_variant(&self, variant: Variant) -> Settings {
        let mut s = self.clone();
        s.variant = variant;
        s
    }
}

/// Parses `"5,10,15"`.
pub fn parse_k_values(raw: String) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let k: usize = part
            .parse()
            .map_err(|_| CliError::Usage(format!("bad cutoff {part:?} in --k")))?;
        if k == 0 {
            return Err(CliError::Usage("cutoffs must be positive".to_string()));
        }
        out.push(k);
    }
    if out.is_empty() {
        return Err(CliError::Usage("--k lists no cutoffs".to_string()));
    }
    Ok(out)
}
