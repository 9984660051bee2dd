//! End-to-end tests of the command-line surface: every subcommand, the
//! settings precedence chain, and the exit-code contract (0 success,
//! 1 usage, 2 data, 3 transport). Pipeline runs replay the committed
//! cassette and encyclopedia cache, so no test here needs the network.

mod support;

use std::fs;
use std::path::{Path, PathBuf};

use mapex_core::corpus::{self, file_sha256};

use support::{fixtures_dir, mapex, synth_document};

fn path_str(path: &Path) -> &str {
    path.to_str().expect("paths are valid UTF-8")
}

fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

/// A one-document corpus written under `dir`, cheap enough for runs that
/// talk to a throwaway stub.
fn tiny_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.jsonl");
    corpus::write_jsonl(&path, &[synth_document(0, 100)]).expect("tiny corpus writes");
    path
}

fn read_json(path: &Path) -> serde_json::Value {
    let raw = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&raw).unwrap_or_else(|e| panic!("{} parses: {e}", path.display()))
}

#[test]
fn replay_runs_offline_and_writes_manifest() {
    let scratch = tempfile::tempdir().unwrap();
    let output = scratch.path().join("results.jsonl");
    let run = mapex(
        &[
            "extract",
            "--corpus",
            path_str(&fixture("corpus_small.jsonl")),
            "--output",
            path_str(&output),
            "--variant",
            "full",
            "--model",
            support::FIXTURE_MODEL,
            "--cassette",
            path_str(&fixture("cassette_small.json")),
            "--cassette-mode",
            "replay",
            "--wiki-cache",
            path_str(&fixture("wiki_cache_small.json")),
            "--offline",
        ],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert!(
        run.stdout
            .contains("extracted 10 document(s) with variant full"),
        "stdout: {}",
        run.stdout
    );

    let results = mapex_core::pipeline::read_results(&output).expect("results parse");
    assert_eq!(results.len(), 10);
    assert!(results.iter().all(|r| !r.failed() && !r.final_phrases.is_empty()));

    // The manifest lands next to the results by default and records the
    // run's effective settings plus cassette traffic.
    let manifest = read_json(&scratch.path().join("results.manifest.json"));
    assert_eq!(manifest["variant"], "full");
    assert_eq!(manifest["model"], support::FIXTURE_MODEL);
    assert_eq!(manifest["doc_count"], 10);
    assert_eq!(manifest["failures"], 0);
    assert_eq!(manifest["length_threshold_tokens"], 512);
    assert_eq!(manifest["cassette"]["mode"], "replay");
    assert_eq!(manifest["cassette"]["replay_misses"], 0);
    assert_eq!(manifest["cassette"]["forwarded"], 0);
    assert!(manifest["cassette"]["replay_hits"].as_u64().unwrap() > 0);
    assert_eq!(
        manifest["corpus_sha256"].as_str().unwrap(),
        file_sha256(&fixture("corpus_small.jsonl")).unwrap()
    );
}

#[test]
fn evaluate_reports_scores_as_json_and_csv() {
    let run = mapex(
        &[
            "evaluate",
            "--results",
            path_str(&fixture("golden/results_full.jsonl")),
            "--corpus",
            path_str(&fixture("corpus_small.jsonl")),
        ],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let report: serde_json::Value = serde_json::from_str(&run.stdout).expect("report parses");
    assert_eq!(report["dataset"], "corpus_small");
    assert_eq!(report["doc_count"], 10);
    assert_eq!(report["scored_docs"], 10);
    assert_eq!(report["skipped_empty_gold"], 0);
    let scores = report["scores"].as_array().unwrap();
    assert_eq!(scores.len(), 3);
    assert_eq!(scores[0]["k"], 5);
    let f1_at_5 = scores[0]["f1"].as_f64().unwrap();
    assert!(
        (f1_at_5 - 86.0 / 90.0).abs() < 1e-9,
        "full variant F1@5 should be 86/90, got {f1_at_5}"
    );

    let scratch = tempfile::tempdir().unwrap();
    let csv_path = scratch.path().join("report.csv");
    let run = mapex(
        &[
            "evaluate",
            "--results",
            path_str(&fixture("golden/results_full.jsonl")),
            "--corpus",
            path_str(&fixture("corpus_small.jsonl")),
            "--dataset",
            "synth_small",
            "--format",
            "csv",
            "--output",
            path_str(&csv_path),
        ],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("label,dataset,k,precision,recall,f1"));
    let first = lines.next().unwrap();
    assert!(
        first.starts_with("synth_small,synth_small,5,1.000000,0.920000,0.955556"),
        "row: {first}"
    );
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn evaluate_respects_the_k_flag() {
    let args = |k: &'static str| {
        vec![
            "evaluate".to_string(),
            "--results".to_string(),
            fixture("golden/results_full.jsonl").display().to_string(),
            "--corpus".to_string(),
            fixture("corpus_small.jsonl").display().to_string(),
            "--k".to_string(),
            k.to_string(),
        ]
    };
    let owned = args("3,7");
    let run = mapex(&owned.iter().map(String::as_str).collect::<Vec<_>>(), &[]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let report: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    let ks: Vec<u64> = report["scores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["k"].as_u64().unwrap())
        .collect();
    assert_eq!(ks, vec![3, 7]);

    for bad in ["0", "five", ""] {
        let owned = args(match bad {
            "0" => "0",
            "five" => "five",
            _ => "",
        });
        let run = mapex(&owned.iter().map(String::as_str).collect::<Vec<_>>(), &[]);
        assert_eq!(run.code, 1, "--k {bad:?} should be a usage error");
    }
}

#[test]
fn stats_pins_the_corpus_shape() {
    let run = mapex(
        &[
            "stats",
            "--corpus",
            path_str(&fixture("corpus_small.jsonl")),
        ],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let stats: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(stats["dataset"], "corpus_small");
    assert_eq!(stats["doc_count"], 10);
    assert_eq!(stats["total_keyphrases"], 50);
    assert_eq!(stats["avg_keyphrases_per_doc"], 5.0);
    let avg = stats["avg_doc_tokens"].as_f64().unwrap();
    assert!((avg - 558.1).abs() < 1e-9, "avg tokens {avg}");
    assert_eq!(
        stats["sha256"].as_str().unwrap(),
        file_sha256(&fixture("corpus_small.jsonl")).unwrap()
    );
}

#[test]
fn bins_histogram_shapes_the_corpus() {
    let run = mapex(
        &["bins", "--corpus", path_str(&fixture("corpus_small.jsonl"))],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let rows: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    let pairs: Vec<(i64, u64)> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["bin"].as_i64().unwrap(), r["doc_count"].as_u64().unwrap()))
        .collect();
    // Short documents fill bins 11-14 and long ones 16-18; bin 15 (which
    // contains ln 512) is deliberately empty so the gain crossover has to
    // straddle it.
    assert_eq!(
        pairs,
        vec![(11, 2), (12, 1), (13, 1), (14, 2), (16, 2), (17, 1), (18, 1)]
    );

    let run = mapex(
        &[
            "bins",
            "--corpus",
            path_str(&fixture("corpus_small.jsonl")),
            "--format",
            "csv",
        ],
        &[],
    );
    assert_eq!(run.code, 0);
    assert!(run
        .stdout
        .starts_with("bin,lower_ln,upper_ln,center_ln,doc_count"));
    assert_eq!(run.stdout.trim_end().lines().count(), 8);
}

fn gain_spec_file(dir: &Path) -> PathBuf {
    let spec = serde_json::json!([{
        "dataset": "synth_small",
        "corpus": fixture("corpus_small.jsonl"),
        "runs": [
            {"name": "base", "results": fixture("golden/results_base.jsonl")},
            {"name": "knowledge_post", "results": fixture("golden/results_knowledge_post.jsonl")},
            {"name": "topic_post", "results": fixture("golden/results_topic_post.jsonl")},
        ],
    }]);
    let path = dir.join("gains.json");
    fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path
}

#[test]
fn gain_analysis_locates_the_routing_threshold() {
    let scratch = tempfile::tempdir().unwrap();
    let spec = gain_spec_file(scratch.path());
    let run = mapex(
        &[
            "bins",
            "--gains",
            path_str(&spec),
            "--baseline",
            "base",
            "--pair",
            "knowledge_post,topic_post",
            "--threshold",
            "512",
        ],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let report: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    let analysis = &report["analysis"];
    assert_eq!(analysis["baseline"], "base");
    assert_eq!(analysis["zero_baseline_cells"], 0);
    let pair = &analysis["pair"];
    assert_eq!(pair["sign_flips"], 1);
    let interval = pair["transition_interval"].as_array().unwrap();
    let (lo, hi) = (
        interval[0].as_f64().unwrap(),
        interval[1].as_f64().unwrap(),
    );
    assert!((lo - 5.8).abs() < 1e-9 && (hi - 6.6).abs() < 1e-9, "interval ({lo}, {hi})");
    let check = &report["threshold_check"];
    assert_eq!(check["threshold_tokens"], 512);
    assert_eq!(check["inside"], true);
    let ln_threshold = check["ln_threshold"].as_f64().unwrap();
    assert!((ln_threshold - 512f64.ln()).abs() < 1e-12);

    // The CSV form renders one row per pipeline per bin.
    let run = mapex(
        &["bins", "--gains", path_str(&spec), "--format", "csv"],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert!(run
        .stdout
        .starts_with("pipeline,bin,center_ln,datasets,delta_avg,rel_avg"));
    assert_eq!(run.stdout.trim_end().lines().count(), 1 + 2 * 7);
}

#[test]
fn ingest_converts_a_raw_benchmark_layout() {
    let scratch = tempfile::tempdir().unwrap();
    let root = scratch.path().join("raw");
    fs::create_dir_all(root.join("docsutf8")).unwrap();
    fs::create_dir_all(root.join("keys")).unwrap();
    fs::write(
        root.join("docsutf8/b-doc.txt"),
        "Adaptive systems under test.\n",
    )
    .unwrap();
    fs::write(root.join("keys/b-doc.key"), "adaptive systems\n\ntesting\n").unwrap();
    fs::write(root.join("docsutf8/a-doc.txt"), "A shorter file.\n").unwrap();
    fs::write(root.join("keys/a-doc.key"), "shorter files\n").unwrap();

    let output = scratch.path().join("ingested.jsonl");
    let run = mapex(
        &[
            "ingest",
            "--dataset",
            "inspec",
            "--input",
            path_str(&root),
            "--output",
            path_str(&output),
        ],
        &[],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let stats: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(stats["dataset"], "inspec");
    assert_eq!(stats["doc_count"], 2);
    assert_eq!(stats["total_keyphrases"], 3);

    let docs = corpus::load_jsonl(&output).unwrap();
    assert_eq!(docs[0].id, "a-doc");
    assert_eq!(docs[1].id, "b-doc");
    assert_eq!(docs[1].document, "Adaptive systems under test.");
    assert_eq!(docs[1].keyphrases, vec!["adaptive systems", "testing"]);

    let run = mapex(
        &[
            "ingest",
            "--dataset",
            "unknown-benchmark",
            "--input",
            path_str(&root),
            "--output",
            path_str(&output),
        ],
        &[],
    );
    assert_eq!(run.code, 1, "unknown dataset names are usage errors");
}

#[test]
fn settings_resolve_flag_over_env_over_file() {
    let chat = support::start_chat_stub();
    let scratch = tempfile::tempdir().unwrap();
    let corpus_path = tiny_corpus(scratch.path());

    let good_config = scratch.path().join("good.toml");
    fs::write(
        &good_config,
        format!("model = \"cfg-model\"\napi_base = \"{}\"\n", chat.base_url),
    )
    .unwrap();
    // A config whose API base points nowhere: it must lose to the
    // environment for the run to succeed.
    let bogus_config = scratch.path().join("bogus.toml");
    fs::write(
        &bogus_config,
        "model = \"cfg-model\"\napi_base = \"http://127.0.0.1:9/v1\"\n",
    )
    .unwrap();

    let run_extract = |config: &Path, envs: &[(&str, &str)], extra: &[&str], out: &str| {
        let output = scratch.path().join(out);
        let manifest = scratch.path().join(format!("{out}.manifest"));
        let mut args = vec![
            "extract",
            "--config",
            path_str(config),
            "--corpus",
            path_str(&corpus_path),
            "--output",
            path_str(&output),
            "--manifest",
            path_str(&manifest),
            "--variant",
            "base",
        ];
        args.extend_from_slice(extra);
        let run = mapex(&args, envs);
        assert_eq!(run.code, 0, "stderr: {}", run.stderr);
        read_json(&manifest)
    };

    let manifest = run_extract(
        &good_config,
        &[("MAPEX_MODEL", "env-model")],
        &["--model", "flag-model"],
        "a.jsonl",
    );
    assert_eq!(manifest["model"], "flag-model", "flags beat the environment");

    let manifest = run_extract(
        &bogus_config,
        &[
            ("MAPEX_MODEL", "env-model"),
            ("MAPEX_API_BASE", &chat.base_url),
        ],
        &[],
        "b.jsonl",
    );
    assert_eq!(manifest["model"], "env-model", "environment beats the file");

    let manifest = run_extract(&good_config, &[], &[], "c.jsonl");
    assert_eq!(manifest["model"], "cfg-model", "the file beats the defaults");
}

#[test]
fn usage_errors_exit_one() {
    let scratch = tempfile::tempdir().unwrap();
    let corpus_path = tiny_corpus(scratch.path());
    let bad_toml = scratch.path().join("bad.toml");
    fs::write(&bad_toml, "model = [unclosed\n").unwrap();
    let unknown_key = scratch.path().join("unknown.toml");
    fs::write(&unknown_key, "modell = \"typo\"\n").unwrap();

    let cases: Vec<Vec<String>> = vec![
        vec!["no-such-command".into()],
        vec!["extract".into(), "--no-such-flag".into()],
        vec![
            "extract".into(),
            "--corpus".into(),
            corpus_path.display().to_string(),
        ],
        vec![
            "extract".into(),
            "--corpus".into(),
            corpus_path.display().to_string(),
            "--output".into(),
            scratch.path().join("r.jsonl").display().to_string(),
            "--variant".into(),
            "imaginary".into(),
        ],
        vec![
            "extract".into(),
            "--corpus".into(),
            corpus_path.display().to_string(),
            "--output".into(),
            scratch.path().join("r.jsonl").display().to_string(),
            "--cassette-mode".into(),
            "rewind".into(),
        ],
        vec![
            "stats".into(),
            "--config".into(),
            bad_toml.display().to_string(),
            "--corpus".into(),
            corpus_path.display().to_string(),
        ],
        vec![
            "stats".into(),
            "--config".into(),
            unknown_key.display().to_string(),
            "--corpus".into(),
            corpus_path.display().to_string(),
        ],
    ];
    for case in cases {
        let args: Vec<&str> = case.iter().map(String::as_str).collect();
        let run = mapex(&args, &[]);
        assert_eq!(run.code, 1, "{case:?} should exit 1; stderr: {}", run.stderr);
    }

    // --pair must name exactly two pipelines.
    let spec = gain_spec_file(scratch.path());
    let run = mapex(
        &["bins", "--gains", path_str(&spec), "--pair", "solo"],
        &[],
    );
    assert_eq!(run.code, 1, "stderr: {}", run.stderr);
    assert!(run.stderr.contains("exactly two"), "stderr: {}", run.stderr);
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let run = mapex(&[flag], &[]);
        assert_eq!(run.code, 0, "{flag} should exit 0");
    }
    assert!(mapex(&["--help"], &[]).stdout.contains("extract"));
}

#[test]
fn data_errors_exit_two() {
    let scratch = tempfile::tempdir().unwrap();
    let corpus_path = tiny_corpus(scratch.path());
    let output = scratch.path().join("out.jsonl");

    // Missing corpus.
    let run = mapex(
        &[
            "stats",
            "--corpus",
            path_str(&scratch.path().join("absent.jsonl")),
        ],
        &[],
    );
    assert_eq!(run.code, 2, "stderr: {}", run.stderr);

    // Corrupt corpus line, reported with its line number.
    let corrupt = scratch.path().join("corrupt.jsonl");
    fs::write(
        &corrupt,
        "{\"id\":\"ok\",\"document\":\"text\",\"keyphrases\":[]}\nnot json\n",
    )
    .unwrap();
    let run = mapex(&["stats", "--corpus", path_str(&corrupt)], &[]);
    assert_eq!(run.code, 2, "stderr: {}", run.stderr);
    assert!(
        run.stderr.contains("corrupt.jsonl:2"),
        "stderr: {}",
        run.stderr
    );

    // Missing results file.
    let run = mapex(
        &[
            "evaluate",
            "--results",
            path_str(&scratch.path().join("absent-results.jsonl")),
            "--corpus",
            path_str(&corpus_path),
        ],
        &[],
    );
    assert_eq!(run.code, 2, "stderr: {}", run.stderr);

    // Replay mode demands an existing cassette before any work starts.
    let run = mapex(
        &[
            "extract",
            "--corpus",
            path_str(&corpus_path),
            "--output",
            path_str(&output),
            "--variant",
            "base",
            "--cassette",
            path_str(&scratch.path().join("absent-cassette.json")),
            "--cassette-mode",
            "replay",
        ],
        &[],
    );
    assert_eq!(run.code, 2, "stderr: {}", run.stderr);
    assert!(run.stderr.contains("cassette"), "stderr: {}", run.stderr);

    // A cassette with no matching recordings fails every document, which
    // is a data problem, not a transport one.
    let empty = scratch.path().join("empty-cassette.json");
    fs::write(&empty, "{}\n").unwrap();
    let run = mapex(
        &[
            "extract",
            "--corpus",
            path_str(&corpus_path),
            "--output",
            path_str(&output),
            "--variant",
            "base",
            "--cassette",
            path_str(&empty),
            "--cassette-mode",
            "replay",
        ],
        &[],
    );
    assert_eq!(run.code, 2, "stderr: {}", run.stderr);
    assert!(
        run.stderr.contains("cassette misses"),
        "stderr: {}",
        run.stderr
    );
}

#[test]
fn transport_errors_exit_three() {
    let stub = support::start_status_stub(401);
    let scratch = tempfile::tempdir().unwrap();
    let corpus_path = tiny_corpus(scratch.path());
    let output = scratch.path().join("out.jsonl");
    let run = mapex(
        &[
            "extract",
            "--corpus",
            path_str(&corpus_path),
            "--output",
            path_str(&output),
            "--variant",
            "base",
            "--api-base",
            &stub.base_url,
        ],
        &[],
    );
    assert_eq!(run.code, 3, "stderr: {}", run.stderr);
    assert!(
        run.stderr.contains("every document failed"),
        "stderr: {}",
        run.stderr
    );
    // The per-document diagnostics keep the underlying API status.
    let results = mapex_core::pipeline::read_results(&output).unwrap();
    assert!(results[0].failed());
    assert!(
        results[0]
            .diagnostics
            .iter()
            .any(|d| d.contains("API returned status 401")),
        "diagnostics: {:?}",
        results[0].diagnostics
    );
}
