//! CLI error classification. Every failure maps to one of three exit
//! codes: 1 for usage and configuration problems, 2 for bad or missing
//! data, 3 for transport failures talking to remote services.

use std::fmt;
use std::process::ExitCode;

use mapex_core::corpus::CorpusError;
use mapex_core::evalkit::EvalError;
use mapex_core::gateway::GatewayError;
use mapex_core::knowledge::KnowledgeError;
use mapex_core::pipeline::PipelineError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, bad template set: exit 1.
    Usage(String),
    /// Malformed or missing inputs (corpus, results, cassette, cache): exit 2.
    Data(String),
    /// Network or API failure: exit 3.
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
            CliError::Transport(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) | CliError::Transport(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::UnknownVariant { .. } => CliError::Usage(e.to_string()),
            PipelineError::Write { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Config { .. } => CliError::Usage(e.to_string()),
            GatewayError::CassetteMiss { .. } | GatewayError::CassetteFile { .. } => {
                CliError::Data(e.to_string())
            }
            GatewayError::Transport { .. }
            | GatewayError::Api { .. }
            | GatewayError::MalformedResponse { .. } => CliError::Transport(e.to_string()),
        }
    }
}

impl From<KnowledgeError> for CliError {
    fn from(e: KnowledgeError) -> Self {
        match e {
            KnowledgeError::Config { .. } => CliError::Usage(e.to_string()),
            KnowledgeError::CacheFile { .. } => CliError::Data(e.to_string()),
            KnowledgeError::Transport { .. } | KnowledgeError::Api { .. } => {
                CliError::Transport(e.to_string())
            }
        }
    }
}

impl From<mapex_core::agents::TemplateError> for CliError {
    fn from(e: mapex_core::agents::TemplateError) -> Self {
        CliError::Usage(e.to_string())
    }
}
