//! Evaluation: stem-normalized F1@K scoring against gold keyphrases, and
//! length-binned gain analysis (see [`bins`]).

pub mod bins;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::pipeline::ExtractionResult;
use crate::text::stem_key;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("result {doc_id:?} has no matching corpus document")]
    MissingDocument { doc_id: String },
    #[error("corpus document {doc_id:?} has no result")]
    MissingResult { doc_id: String },
    #[error("duplicate result for document {doc_id:?}")]
    DuplicateResult { doc_id: String },
    #[error("pipeline {name:?} not found among the provided runs")]
    UnknownPipeline { name: String },
    #[error("no k values requested")]
    NoKValues,
}

/// Precision, recall, and F1 for one document at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecallF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrecisionRecallF1 {
    const ZERO: PrecisionRecallF1 = PrecisionRecallF1 {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

/// Stem keys for a phrase list, deduplicated with first occurrence kept.
fn unique_keys(phrases: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut keys = Vec::new();
    for phrase in phrases {
        let key = stem_key(phrase);
        if key.is_empty() {
            continue;
        }
        if seen.insert(key.clone()) {
            keys.push(key);
        }
    }
    keys
}

/// F1@K between predicted and gold phrases. Both sides are normalized
/// (lowercase, whitespace collapse, per-word stemming) and deduplicated;
/// predictions keep their order and are cut to the top `k`. Precision
/// divides by `min(k, deduplicated predictions)`, recall by the
/// deduplicated gold count. Empty predictions or empty gold score zero.
pub fn f1_at_k(predicted: &[String], gold: &[String], k: usize) -> PrecisionRecallF1 {
    if k == 0 {
        return PrecisionRecallF1::ZERO;
    }
    let pred_keys = unique_keys(predicted);
    let gold_keys: BTreeSet<String> = unique_keys(gold).into_iter().collect();
    if pred_keys.is_empty() || gold_keys.is_empty() {
        return PrecisionRecallF1::ZERO;
    }
    let denom_p = pred_keys.len().min(k);
    let matches = pred_keys
        .iter()
        .take(k)
        .filter(|key| gold_keys.contains(*key))
        .count();
    let precision = matches as f64 / denom_p as f64;
    let recall = matches as f64 / gold_keys.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PrecisionRecallF1 {
        precision,
        recall,
        f1,
    }
}

/// Macro-averaged scores at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores for one results file against one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetScores {
    pub dataset: String,
    pub doc_count: usize,
    /// Documents that entered the macro average.
    pub scored_docs: usize,
    /// Documents skipped because their gold list normalizes to empty.
    pub skipped_empty_gold: usize,
    pub scores: Vec<KScore>,
}

/// Joins results to corpus documents by id. Every result must match a
/// document and vice versa; order follows the corpus.
fn join<'a>(
    results: &'a [ExtractionResult],
    corpus: &'a [Document],
) -> Result<Vec<(&'a Document, &'a ExtractionResult)>, EvalError> {
    let mut by_id: std::collections::BTreeMap<&str, &ExtractionResult> =
        std::collections::BTreeMap::new();
    for result in results {
        if by_id.insert(result.doc_id.as_str(), result).is_some() {
            return Err(EvalError::DuplicateResult {
                doc_id: result.doc_id.clone(),
            });
        }
    }
    let mut pairs = Vec::with_capacity(corpus.len());
    for doc in corpus {
        let result = by_id
            .remove(doc.id.as_str())
            .ok_or_else(|| EvalError::MissingResult {
                doc_id: doc.id.clone(),
            })?;
        pairs.push((doc, result));
    }
    if let Some((doc_id, _)) = by_id.into_iter().next() {
        return Err(EvalError::MissingDocument {
            doc_id: doc_id.to_string(),
        });
    }
    Ok(pairs)
}

/// Scores a run: macro-averages per-document precision/recall/F1 at each
/// cutoff over documents with non-empty gold.
pub fn evaluate_run(
    dataset: &str,
    results: &[ExtractionResult],
    corpus: &[Document],
    k_values: &[usize],
) -> Result<DatasetScores, EvalError> {
    if k_values.is_empty() {
        return Err(EvalError::NoKValues);
    }
    let pairs = join(results, corpus)?;
    let mut sums = vec![(0.0_f64, 0.0_f64, 0.0_f64); k_values.len()];
    let mut scored_docs = 0usize;
    let mut skipped = 0usize;
    for (doc, result) in &pairs {
        if unique_keys(&doc.keyphrases).is_empty() {
            skipped += 1;
            continue;
        }
        scored_docs += 1;
        for (slot, &k) in sums.iter_mut().zip(k_values) {
            let score = f1_at_k(&result.final_phrases, &doc.keyphrases, k);
            slot.0 += score.precision;
            slot.1 += score.recall;
            slot.2 += score.f1;
        }
    }
    let denom = scored_docs.max(1) as f64;
    let scores = k_values
        .iter()
        .zip(&sums)
        .map(|(&k, &(p, r, f))| KScore {
            k,
            precision: p / denom,
            recall: r / denom,
            f1: f / denom,
        })
        .collect();
    Ok(DatasetScores {
        dataset: dataset.to_string(),
        doc_count: pairs.len(),
        scored_docs,
        skipped_empty_gold: skipped,
        scores,
    })
}

/// Mean F1 (and P/R) across several datasets at matching cutoffs — the
/// average-of-dataset-means convention, not a pooled document average.
pub fn average_scores(per_dataset: &[DatasetScores]) -> Vec<KScore> {
    let Some(first) = per_dataset.first() else {
        return Vec::new();
    };
    let n = per_dataset.len() as f64;
    first
        .scores
        .iter()
        .enumerate()
        .map(|(idx, base)| {
            let mut sum = (0.0, 0.0, 0.0);
            for ds in per_dataset {
                let s = &ds.scores[idx];
                sum.0 += s.precision;
                sum.1 += s.recall;
                sum.2 += s.f1;
            }
            KScore {
                k: base.k,
                precision: sum.0 / n,
                recall: sum.1 / n,
                f1: sum.2 / n,
            }
        })
        .collect()
}

/// Per-document F1 at one cutoff, in corpus order, skipping empty-gold
/// documents. Used by the length-binned analysis.
pub fn per_document_f1(
    results: &[ExtractionResult],
    corpus: &[Document],
    k: usize,
) -> Result<Vec<(String, f64)>, EvalError> {
    let pairs = join(results, corpus)?;
    Ok(pairs
        .into_iter()
        .filter(|(doc, _)| !unique_keys(&doc.keyphrases).is_empty())
        .map(|(doc, result)| {
            (
                doc.id.clone(),
                f1_at_k(&result.final_phrases, &doc.keyphrases, k).f1,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{RouteTaken, Variant};

    fn phrases(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    const EPS: f64 = 1e-9;

    fn assert_prf(got: PrecisionRecallF1, p: f64, r: f64, f1: f64) {
        assert!((got.precision - p).abs() < EPS, "precision {got:?} vs {p}");
        assert!((got.recall - r).abs() < EPS, "recall {got:?} vs {r}");
        assert!((got.f1 - f1).abs() < EPS, "f1 {got:?} vs {f1}");
    }

    #[test]
    fn two_matches_of_five_predictions_against_four_gold() {
        // P = 2/5, R = 2/4, F1 = 2·(2/5)·(1/2) / (2/5 + 1/2) = 4/9.
        let got = f1_at_k(
            &phrases(&["alpha beta", "gamma", "delta", "epsilon", "zeta"]),
            &phrases(&["alpha beta", "gamma", "eta", "theta"]),
            5,
        );
        assert_prf(got, 2.0 / 5.0, 0.5, 4.0 / 9.0);
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let gold = phrases(&["graph neural network", "message passing", "readout"]);
        assert_prf(f1_at_k(&gold.clone(), &gold, 5), 1.0, 1.0, 1.0);
    }

    #[test]
    fn empty_predictions_score_zero() {
        assert_prf(f1_at_k(&[], &phrases(&["a b"]), 5), 0.0, 0.0, 0.0);
    }

    #[test]
    fn empty_gold_scores_zero() {
        assert_prf(f1_at_k(&phrases(&["a b"]), &[], 5), 0.0, 0.0, 0.0);
    }

    #[test]
    fn stemming_and_case_fold_before_matching() {
        let got = f1_at_k(
            &phrases(&["Running  Dogs"]),
            &phrases(&["run dog"]),
            5,
        );
        assert_prf(got, 1.0, 1.0, 1.0);
    }

    #[test]
    fn duplicate_predictions_collapse_before_the_cutoff() {
        // [a, A, b] dedups to [a, b]: P = 1/2 (denominator 2, not 3), R = 1.
        let got = f1_at_k(&phrases(&["a x", "A  x", "b y"]), &phrases(&["a x"]), 5);
        assert_prf(got, 0.5, 1.0, 2.0 / 3.0);
    }

    #[test]
    fn matches_beyond_k_are_ignored() {
        // Gold hits at ranks 1 and 7, k = 5: only the first counts.
        let preds = phrases(&["g1", "x2", "x3", "x4", "x5", "x6", "g2"]);
        let got = f1_at_k(&preds, &phrases(&["g1", "g2"]), 5);
        assert_prf(got, 0.2, 0.5, 2.0 / 7.0);
    }

    #[test]
    fn short_prediction_lists_divide_by_their_own_length() {
        // 3 predictions, 2 match, k = 10: P = 2/3, R = 2/4, F1 = 4/7.
        let got = f1_at_k(
            &phrases(&["g1", "g2", "x"]),
            &phrases(&["g1", "g2", "g3", "g4"]),
            10,
        );
        assert_prf(got, 2.0 / 3.0, 0.5, 4.0 / 7.0);
    }

    #[test]
    fn disjoint_lists_score_zero() {
        let got = f1_at_k(&phrases(&["a b"]), &phrases(&["c d"]), 5);
        assert_prf(got, 0.0, 0.0, 0.0);
    }

    #[test]
    fn k_zero_scores_zero() {
        assert_prf(f1_at_k(&phrases(&["a"]), &phrases(&["a"]), 0), 0.0, 0.0, 0.0);
    }

    fn result_for(doc_id: &str, finals: &[&str]) -> ExtractionResult {
        ExtractionResult {
            doc_id: doc_id.to_string(),
            variant: Variant::Base,
            route_taken: RouteTaken::NotApplicable,
            role: None,
            candidates: Vec::new(),
            topics: None,
            knowledge_keys: None,
            preliminary: Vec::new(),
            final_phrases: phrases(finals),
            diagnostics: Vec::new(),
        }
    }

    fn doc(id: &str, gold: &[&str]) -> Document {
        Document {
            id: id.to_string(),
            document: "text".to_string(),
            keyphrases: phrases(gold),
        }
    }

    #[test]
    fn evaluate_macro_averages_per_document() {
        // Doc a: perfect at k=5 (F1 1). Doc b: disjoint (F1 0). Mean = 0.5.
        let corpus = vec![doc("a", &["x y"]), doc("b", &["p q"])];
        let results = vec![result_for("a", &["x y"]), result_for("b", &["z"])];
        let scores = evaluate_run("toy", &results, &corpus, &[5]).unwrap();
        assert_eq!(scores.doc_count, 2);
        assert_eq!(scores.scored_docs, 2);
        assert_eq!(scores.skipped_empty_gold, 0);
        assert!((scores.scores[0].f1 - 0.5).abs() < EPS);
    }

    #[test]
    fn evaluate_skips_documents_with_empty_gold() {
        let corpus = vec![doc("a", &["x y"]), doc("b", &[])];
        let results = vec![result_for("a", &["x y"]), result_for("b", &["z"])];
        let scores = evaluate_run("toy", &results, &corpus, &[5]).unwrap();
        assert_eq!(scores.scored_docs, 1);
        assert_eq!(scores.skipped_empty_gold, 1);
        assert!((scores.scores[0].f1 - 1.0).abs() < EPS);
    }

    #[test]
    fn evaluate_rejects_misaligned_inputs() {
        let corpus = vec![doc("a", &["x"])];
        assert!(matches!(
            evaluate_run("toy", &[result_for("b", &[])], &corpus, &[5]),
            Err(EvalError::MissingResult { .. }),
        ));
        let both = vec![result_for("a", &[]), result_for("zz", &[])];
        assert!(matches!(
            evaluate_run("toy", &both, &corpus, &[5]),
            Err(EvalError::MissingDocument { .. }),
        ));
        let dup = vec![result_for("a", &[]), result_for("a", &[])];
        assert!(matches!(
            evaluate_run("toy", &dup, &corpus, &[5]),
            Err(EvalError::DuplicateResult { .. }),
        ));
    }

    #[test]
    fn average_scores_means_the_dataset_means() {
        let a = DatasetScores {
            dataset: "a".to_string(),
            doc_count: 1,
            scored_docs: 1,
            skipped_empty_gold: 0,
            scores: vec![KScore { k: 5, precision: 0.2, recall: 0.4, f1: 0.3 }],
        };
        let b = DatasetScores {
            dataset: "b".to_string(),
            doc_count: 9,
            scored_docs: 9,
            skipped_empty_gold: 0,
            scores: vec![KScore { k: 5, precision: 0.4, recall: 0.6, f1: 0.5 }],
        };
        let avg = average_scores(&[a, b]);
        // Dataset sizes do not weight the average.
        assert!((avg[0].precision - 0.3).abs() < EPS);
        assert!((avg[0].recall - 0.5).abs() < EPS);
        assert!((avg[0].f1 - 0.4).abs() < EPS);
    }
}
