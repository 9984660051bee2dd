//! Subcommand implementations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mapex_core::corpus::{
    compute_stats, file_sha256, load_jsonl, load_raw_dir, write_jsonl, CorpusError, Dataset,
    Document, Tokenizer,
};
use mapex_core::evalkit::bins::{
    bin_histogram, check_threshold, gain_analysis, BinRow, DatasetRun, GainAnalysis,
    ThresholdCheck, DEFAULT_BIN_WIDTH,
};
use mapex_core::evalkit::{evaluate_run, DatasetScores, KScore};
use mapex_core::pipeline::{
    now_rfc3339, read_results, run_corpus, write_manifest, write_results, CassetteManifest,
    ExtractionResult, RunManifest, RunOutput, Variant,
};

use crate::cli::{
    AblateArgs, BinsArgs, EvaluateArgs, ExtractArgs, IngestArgs, OutputFormat, StatsArgs,
};
use crate::errors::CliError;
use crate::settings::{parse_k_values, FileConfig, Settings};

fn dataset_label(explicit: Option<&str>, corpus_path: &Path) -> String {
    explicit.map(str::to_string).unwrap_or_else(|| {
        corpus_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string())
    })
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn ingest(args: &IngestArgs) -> Result<(), CliError> {
    let dataset: Dataset = args
        .dataset
        .parse()
        .map_err(|e: CorpusError| CliError::Usage(e.to_string()))?;
    let docs = load_raw_dir(&args.input)?;
    write_jsonl(&args.output, &docs)?;
    let stats = compute_stats(dataset.name(), &docs, &Tokenizer::Whitespace);
    println!(
        "{}",
        serde_json::to_string_pretty(&stats).expect("stats serialize")
    );
    Ok(())
}

/// Shared by extract and ablate: one variant over one corpus, results and
/// manifest written, failures surfaced on stderr.
async fn run_one_variant(
    settings: &Settings,
    docs: &[Document],
    corpus_path: &Path,
    results_path: &Path,
    manifest_path: &Path,
) -> Result<RunOutput, CliError> {
    let ctx = settings.pipeline_context()?;
    let started_at = now_rfc3339();
    let output = run_corpus(docs, &ctx).await;
    let finished_at = now_rfc3339();
    write_results(results_path, &output.results)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        variant: settings.variant,
        model: settings.model.clone(),
        template_set: settings.template_set.clone(),
        length_threshold_tokens: settings.length_threshold_tokens,
        worker_limit: settings.worker_limit,
        corpus_path: corpus_path.display().to_string(),
        corpus_sha256: file_sha256(corpus_path)?,
        doc_count: docs.len(),
        failures: output.failures,
        cassette: settings.cassette.as_ref().map(|path| {
            CassetteManifest::new(
                path.display().to_string(),
                settings.cassette_mode,
                ctx.agents.gateway().stats(),
            )
        }),
        started_at,
        finished_at,
    };
    write_manifest(manifest_path, &manifest)?;
    if output.failures > 0 {
        eprintln!(
            "warning: {} of {} document(s) failed; see diagnostics in {}",
            output.failures,
            docs.len(),
            results_path.display(),
        );
    }
    if !docs.is_empty() && output.failures == docs.len() {
        let cassette_miss = output
            .results
            .iter()
            .flat_map(|r| &r.diagnostics)
            .any(|d| d.contains("cassette replay miss"));
        let msg = format!(
            "every document failed during the {} run",
            settings.variant.name(),
        );
        return Err(if cassette_miss {
            CliError::Data(format!("{msg} (cassette misses)"))
        } else {
            CliError::Transport(msg)
        });
    }
    Ok(output)
}

pub async fn extract(config: Option<&Path>, args: &ExtractArgs) -> Result<(), CliError> {
    let file = FileConfig::load(config)?;
    let settings = Settings::resolve(&file, &args.flags)?;
    let docs = load_jsonl(&args.corpus)?;
    let manifest_path = args
        .manifest
        .clone()
        .unwrap_or_else(|| args.output.with_extension("manifest.json"));
    let output =
        run_one_variant(&settings, &docs, &args.corpus, &args.output, &manifest_path).await?;
    println!(
        "extracted {} document(s) with variant {} -> {}",
        output.results.len(),
        settings.variant.name(),
        args.output.display(),
    );
    Ok(())
}

fn scores_to_csv(reports: &[(&str, &DatasetScores)]) -> String {
    let mut out = String::from("label,dataset,k,precision,recall,f1\n");
    for (label, report) in reports {
        for score in &report.scores {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                label, report.dataset, score.k, score.precision, score.recall, score.f1,
            ));
        }
    }
    out
}

pub fn evaluate(config: Option<&Path>, args: &EvaluateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(config)?;
    let k_values = match &args.k {
        Some(raw) => parse_k_values(raw.clone())?,
        None => file.k_values.clone().unwrap_or_else(|| vec![5, 10, 15]),
    };
    let docs = load_jsonl(&args.corpus)?;
    let results = read_results(&args.results)?;
    let dataset = dataset_label(args.dataset.as_deref(), &args.corpus);
    let report = evaluate_run(&dataset, &results, &docs, &k_values)?;
    let text = match args.format {
        OutputFormat::Json => {
            serde_json::to_string_pretty(&report).expect("report serialize")
        }
        OutputFormat::Csv => scores_to_csv(&[(dataset.as_str(), &report)]),
    };
    write_or_print(args.output.as_deref(), &text)
}

/// One row of the ablation table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantScores {
    pub variant: String,
    pub failures: usize,
    pub scores: Vec<KScore>,
}

fn render_score_table(rows: &[VariantScores], k_values: &[usize]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<16}", "variant"));
    for k in k_values {
        out.push_str(&format!("{:>9}", format!("F1@{k}")));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{:<16}", row.variant));
        for score in &row.scores {
            out.push_str(&format!("{:>9.2}", score.f1 * 100.0));
        }
        out.push('\n');
    }
    out
}

pub async fn ablate(config: Option<&Path>, args: &AblateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(config)?;
    let base_settings = Settings::resolve(&file, &args.flags)?;
    let variants: Vec<Variant> = match &args.variants {
        None => Variant::ALL.to_vec(),
        Some(raw) => raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()?,
    };
    if variants.is_empty() {
        return Err(CliError::Usage("--variants lists no variants".to_string()));
    }
    let docs = load_jsonl(&args.corpus)?;
    std::fs::create_dir_all(&args.output_dir).map_err(|e| {
        CliError::Data(format!(
            "cannot create {}: {e}",
            args.output_dir.display()
        ))
    })?;
    let dataset = dataset_label(args.dataset.as_deref(), &args.corpus);
    let mut rows = Vec::new();
    for variant in variants {
        let settings = base_settings.with_variant(variant);
        let results_path = args
            .output_dir
            .join(format!("results_{}.jsonl", variant.name()));
        let manifest_path = args
            .output_dir
            .join(format!("manifest_{}.json", variant.name()));
        let output =
            run_one_variant(&settings, &docs, &args.corpus, &results_path, &manifest_path)
                .await?;
        let report = evaluate_run(&dataset, &output.results, &docs, &base_settings.k_values)?;
        rows.push(VariantScores {
            variant: variant.name().to_string(),
            failures: output.failures,
            scores: report.scores,
        });
    }
    let table_json =
        serde_json::to_string_pretty(&rows).expect("table serialize");
    std::fs::write(args.output_dir.join("table.json"), &table_json)
        .map_err(|e| CliError::Data(format!("cannot write table.json: {e}")))?;
    let mut csv = String::from("variant,k,precision,recall,f1\n");
    for row in &rows {
        for score in &row.scores {
            csv.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6}\n",
                row.variant, score.k, score.precision, score.recall, score.f1,
            ));
        }
    }
    std::fs::write(args.output_dir.join("table.csv"), &csv)
        .map_err(|e| CliError::Data(format!("cannot write table.csv: {e}")))?;
    print!("{}", render_score_table(&rows, &base_settings.k_values));
    Ok(())
}

/// Gain-analysis spec file: one entry per dataset.
#[derive(Debug, Deserialize)]
struct GainSpecEntry {
    dataset: String,
    corpus: PathBuf,
    runs: Vec<GainRunSpec>,
}

#[derive(Debug, Deserialize)]
struct GainRunSpec {
    name: String,
    results: PathBuf,
}

#[derive(Debug, Serialize)]
struct GainReport {
    analysis: GainAnalysis,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_check: Option<ThresholdCheck>,
}

fn histogram_csv(rows: &[BinRow]) -> String {
    let mut out = String::from("bin,lower_ln,upper_ln,center_ln,doc_count\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{}\n",
            row.bin, row.lower_ln, row.upper_ln, row.center_ln, row.doc_count,
        ));
    }
    out
}

fn gains_csv(analysis: &GainAnalysis) -> String {
    let mut out = String::from("pipeline,bin,center_ln,datasets,delta_avg,rel_avg\n");
    for pipeline in &analysis.pipelines {
        for point in &pipeline.points {
            out.push_str(&format!(
                "{},{},{:.4},{},{:.6},{}\n",
                pipeline.pipeline,
                point.bin,
                point.center_ln,
                point.datasets,
                point.delta_avg,
                point
                    .rel_avg
                    .map(|r| format!("{r:.6}"))
                    .unwrap_or_default(),
            ));
        }
    }
    out
}

pub fn bins(config: Option<&Path>, args: &BinsArgs) -> Result<(), CliError> {
    let file = FileConfig::load(config)?;
    let width = args
        .width
        .or(file.bin_width)
        .unwrap_or(DEFAULT_BIN_WIDTH);
    let vocab = args.vocab.clone().or_else(|| file.vocab.clone());
    let tokenizer = match &vocab {
        Some(path) => Tokenizer::from_vocab_file(path)?,
        None => Tokenizer::Whitespace,
    };

    if let Some(spec_path) = &args.gains {
        let raw = std::fs::read_to_string(spec_path).map_err(|e| {
            CliError::Data(format!("cannot read {}: {e}", spec_path.display()))
        })?;
        let spec: Vec<GainSpecEntry> = serde_json::from_str(&raw).map_err(|e| {
            CliError::Data(format!("bad gain spec {}: {e}", spec_path.display()))
        })?;
        if spec.is_empty() {
            return Err(CliError::Data("gain spec lists no datasets".to_string()));
        }
        // Load everything first so DatasetRun can borrow it.
        type LoadedEntry = (String, Vec<Document>, Vec<(String, Vec<ExtractionResult>)>);
        let mut loaded: Vec<LoadedEntry> = Vec::new();
        for entry in &spec {
            let corpus = load_jsonl(&entry.corpus)?;
            let mut runs = Vec::new();
            for run in &entry.runs {
                runs.push((run.name.clone(), read_results(&run.results)?));
            }
            loaded.push((entry.dataset.clone(), corpus, runs));
        }
        let inputs: Vec<DatasetRun<'_>> = loaded
            .iter()
            .map(|(dataset, corpus, runs)| DatasetRun {
                dataset,
                corpus,
                runs: runs
                    .iter()
                    .map(|(name, results)| (name.as_str(), results.as_slice()))
                    .collect(),
            })
            .collect();
        let baseline = args.baseline.clone().unwrap_or_else(|| "base".to_string());
        let pair: Option<(String, String)> = match &args.pair {
            None => None,
            Some(raw) => {
                let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
                if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
                    return Err(CliError::Usage(
                        "--pair wants exactly two names, e.g. knowledge_post,topic_post"
                            .to_string(),
                    ));
                }
                Some((parts[0].to_string(), parts[1].to_string()))
            }
        };
        let analysis = gain_analysis(
            &inputs,
            &baseline,
            pair.as_ref().map(|(a, b)| (a.as_str(), b.as_str())),
            args.k.unwrap_or(10),
            width,
            &tokenizer,
        )?;
        let threshold_check = args.threshold.map(|t| {
            check_threshold(
                t,
                analysis
                    .pair
                    .as_ref()
                    .and_then(|p| p.transition_interval),
            )
        });
        let text = match args.format {
            OutputFormat::Json => serde_json::to_string_pretty(&GainReport {
                analysis,
                threshold_check,
            })
            .expect("gain report serialize"),
            OutputFormat::Csv => gains_csv(&analysis),
        };
        return write_or_print(args.output.as_deref(), &text);
    }

    let corpus_path = args
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Usage("--corpus or --gains is required".to_string()))?;
    let docs = load_jsonl(corpus_path)?;
    let rows = bin_histogram(&docs, &tokenizer, width);
    let text = match args.format {
        OutputFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
        OutputFormat::Csv => histogram_csv(&rows),
    };
    write_or_print(args.output.as_deref(), &text)
}

pub fn stats(config: Option<&Path>, args: &StatsArgs) -> Result<(), CliError> {
    let file = FileConfig::load(config)?;
    let vocab = args.vocab.clone().or_else(|| file.vocab.clone());
    let tokenizer = match &vocab {
        Some(path) => Tokenizer::from_vocab_file(path)?,
        None => Tokenizer::Whitespace,
    };
    let docs = load_jsonl(&args.corpus)?;
    let dataset = dataset_label(args.dataset.as_deref(), &args.corpus);
    let stats = compute_stats(&dataset, &docs, &tokenizer);
    let sha256 = file_sha256(&args.corpus)?;
    let mut value = serde_json::to_value(&stats).expect("stats serialize");
    value
        .as_object_mut()
        .expect("stats are an object")
        .insert("sha256".to_string(), serde_json::Value::String(sha256));
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("stats serialize")
    );
    Ok(())
}
