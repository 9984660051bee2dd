//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "mapex",
    version,
    about = "Multi-agent keyphrase extraction: recruit an expert persona, extract candidates, refine by topics or encyclopedia knowledge depending on document length, post-process, evaluate."
)]
pub struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a raw benchmark directory (docsutf8/ + keys/) to corpus jsonl
    Ingest(IngestArgs),
    /// Run a pipeline variant over a corpus, writing results jsonl + manifest
    Extract(ExtractArgs),
    /// Score a results file against its corpus (stemmed F1@K)
    Evaluate(EvaluateArgs),
    /// Run several variants over one corpus and tabulate their scores
    Ablate(AblateArgs),
    /// Length histogram of a corpus, or per-bin gain analysis of recorded runs
    Bins(BinsArgs),
    /// Corpus summary statistics
    Stats(StatsArgs),
}

/// Flags shared by the commands that run the pipeline. Every flag is
/// optional; unset values fall back to the environment, the config file,
/// then built-in defaults.
#[derive(Debug, Default, Args)]
pub struct PipelineFlags {
    /// Pipeline variant: base, expert_role, topic, topic_post, knowledge,
    /// knowledge_post, or full
    #[arg(long)]
    pub variant: Option<String>,
    /// Model name sent to the chat API
    #[arg(long)]
    pub model: Option<String>,
    /// "builtin" or a directory of prompt templates
    #[arg(long, value_name = "NAME|DIR")]
    pub template_set: Option<String>,
    /// Chat API root, e.g. https://api.example.com/v1
    #[arg(long, value_name = "URL")]
    pub api_base: Option<String>,
    /// Cassette file for recording or replaying chat traffic
    #[arg(long, value_name = "FILE")]
    pub cassette: Option<PathBuf>,
    /// record, replay, or passthrough
    #[arg(long, value_name = "MODE")]
    pub cassette_mode: Option<String>,
    /// Encyclopedia summary cache file
    #[arg(long, value_name = "FILE")]
    pub wiki_cache: Option<PathBuf>,
    /// Serve encyclopedia lookups from the cache only; never fetch
    #[arg(long)]
    pub offline: bool,
    /// Maximum documents processed concurrently
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Token count at which a document routes to the long path
    #[arg(long, value_name = "TOKENS")]
    pub threshold: Option<usize>,
    /// Score cutoffs, comma-separated (e.g. 5,10,15)
    #[arg(long, value_name = "LIST")]
    pub k: Option<String>,
    /// Vocabulary file for subword token counting (default: whitespace)
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Dataset name: inspec, semeval2017, semeval2010, duc2001, nus, krapivin
    #[arg(long)]
    pub dataset: String,
    /// Directory holding docsutf8/ and keys/
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    /// Corpus jsonl to write
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Corpus jsonl to process
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Results jsonl to write
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Manifest path (default: results path with .manifest.json)
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub flags: PipelineFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Results jsonl produced by extract
    #[arg(long, value_name = "FILE")]
    pub results: PathBuf,
    /// Corpus jsonl the results were produced from
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Dataset label in the report (default: corpus file stem)
    #[arg(long)]
    pub dataset: Option<String>,
    /// Score cutoffs, comma-separated (default: 5,10,15)
    #[arg(long, value_name = "LIST")]
    pub k: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Corpus jsonl to process
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Directory for per-variant results, manifests, and the score table
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
    /// Variants to run, comma-separated (default: all)
    #[arg(long, value_name = "LIST")]
    pub variants: Option<String>,
    /// Dataset label in the table (default: corpus file stem)
    #[arg(long)]
    pub dataset: Option<String>,
    #[command(flatten)]
    pub flags: PipelineFlags,
}

#[derive(Debug, Args)]
pub struct BinsArgs {
    /// Corpus jsonl to histogram
    #[arg(long, value_name = "FILE", required_unless_present = "gains")]
    pub corpus: Option<PathBuf>,
    /// Gain-analysis spec: JSON list of {dataset, corpus, runs:[{name, results}]}
    #[arg(long, value_name = "FILE")]
    pub gains: Option<PathBuf>,
    /// Baseline pipeline name in the spec (default: base)
    #[arg(long)]
    pub baseline: Option<String>,
    /// Two pipeline names whose relative-gain curves to compare, e.g.
    /// knowledge_post,topic_post
    #[arg(long, value_name = "A,B")]
    pub pair: Option<String>,
    /// Cutoff for per-document F1 in the gain analysis (default: 10)
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    /// Token threshold to test against the transition interval
    #[arg(long, value_name = "TOKENS")]
    pub threshold: Option<usize>,
    /// Bin width in ln(tokens)
    #[arg(long, value_name = "LN")]
    pub width: Option<f64>,
    /// Vocabulary file for subword token counting
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus jsonl to summarize
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Dataset label in the report (default: corpus file stem)
    #[arg(long)]
    pub dataset: Option<String>,
    /// Vocabulary file for subword token counting
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}
