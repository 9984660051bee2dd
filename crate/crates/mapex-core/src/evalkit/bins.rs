//! Length-binned analysis: documents are grouped by the natural log of
//! their token count on a fixed grid, per-bin absolute and relative score
//! gains are averaged across datasets, and a transition interval is
//! located where two pipelines' relative-gain curves cross.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{per_document_f1, EvalError};
use crate::corpus::{Document, Tokenizer};
use crate::pipeline::ExtractionResult;

/// Default grid step in ln(tokens).
pub const DEFAULT_BIN_WIDTH: f64 = 0.4;

/// Bin index for a token count: the grid is anchored at ln = 0 with fixed
/// width, so bin `i` covers ln(tokens) in `[i·width, (i+1)·width)`. Counts
/// of zero are treated as one token so every document lands somewhere.
pub fn bin_index(token_count: usize, width: f64) -> i64 {
    let ln = (token_count.max(1) as f64).ln();
    (ln / width).floor() as i64
}

pub fn bin_center(index: i64, width: f64) -> f64 {
    (index as f64 + 0.5) * width
}

pub fn bin_bounds(index: i64, width: f64) -> (f64, f64) {
    (index as f64 * width, (index as f64 + 1.0) * width)
}

/// One histogram row for a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub bin: i64,
    pub lower_ln: f64,
    pub upper_ln: f64,
    pub center_ln: f64,
    pub doc_count: usize,
}

/// Histogram of document lengths over the ln grid, ascending by bin.
pub fn bin_histogram(corpus: &[Document], tokenizer: &Tokenizer, width: f64) -> Vec<BinRow> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for doc in corpus {
        *counts
            .entry(bin_index(tokenizer.count(&doc.document), width))
            .or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(bin, doc_count)| {
            let (lower_ln, upper_ln) = bin_bounds(bin, width);
            BinRow {
                bin,
                lower_ln,
                upper_ln,
                center_ln: bin_center(bin, width),
                doc_count,
            }
        })
        .collect()
}

/// One dataset's inputs to the gain analysis: the corpus and the results
/// of each pipeline over it. Every dataset must carry the same pipelines.
pub struct DatasetRun<'a> {
    pub dataset: &'a str,
    pub corpus: &'a [Document],
    pub runs: Vec<(&'a str, &'a [ExtractionResult])>,
}

/// Averaged gains for one pipeline in one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub bin: i64,
    pub center_ln: f64,
    /// Datasets contributing to the absolute-gain average.
    pub datasets: usize,
    /// Mean over datasets of (pipeline F1 − baseline F1) in this bin.
    pub delta_avg: f64,
    /// Mean over datasets of delta / baseline F1, skipping datasets whose
    /// baseline is zero in this bin; absent when every dataset was skipped.
    pub rel_avg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineGain {
    pub pipeline: String,
    pub points: Vec<GainPoint>,
}

/// Relative-gain gap between two pipelines in one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPoint {
    pub bin: i64,
    pub center_ln: f64,
    /// `rel_avg` of the first pipeline minus the second's.
    pub rel_gain_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub first: String,
    pub second: String,
    /// Bins where both pipelines have a defined relative gain, ascending.
    pub points: Vec<PairPoint>,
    /// Sign changes of the gap across consecutive points.
    pub sign_flips: usize,
    /// Bin centers bracketing the crossover: from the last bin before the
    /// first sign flip to the first bin after the last one. Absent when
    /// the gap never changes sign.
    pub transition_interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainAnalysis {
    pub k: usize,
    pub bin_width: f64,
    pub baseline: String,
    pub pipelines: Vec<PipelineGain>,
    /// (dataset, bin) cells where a zero baseline excluded the relative
    /// gain from the average.
    pub zero_baseline_cells: usize,
    pub pair: Option<PairComparison>,
}

/// Sign with a tolerance band so float dust does not count as a flip.
fn sign_of(x: f64) -> i8 {
    if x > 1e-12 {
        1
    } else if x < -1e-12 {
        -1
    } else {
        0
    }
}

fn transition_from_points(points: &[PairPoint]) -> (usize, Option<(f64, f64)>) {
    let mut flips = 0usize;
    let mut first_flip: Option<(f64, f64)> = None;
    let mut last_flip: Option<(f64, f64)> = None;
    let mut prev: Option<(&PairPoint, i8)> = None;
    for point in points {
        let s = sign_of(point.rel_gain_gap);
        if s == 0 {
            continue;
        }
        if let Some((prev_point, prev_sign)) = prev {
            if prev_sign != s {
                flips += 1;
                let span = (prev_point.center_ln, point.center_ln);
                if first_flip.is_none() {
                    first_flip = Some(span);
                }
                last_flip = Some(span);
            }
        }
        prev = Some((point, s));
    }
    let interval = match (first_flip, last_flip) {
        (Some((lo, _)), Some((_, hi))) => Some((lo, hi)),
        _ => None,
    };
    (flips, interval)
}

/// Computes per-bin score gains over the baseline, averaged across
/// datasets, and optionally compares a pipeline pair to locate where their
/// relative-gain curves cross.
pub fn gain_analysis(
    inputs: &[DatasetRun<'_>],
    baseline: &str,
    pair: Option<(&str, &str)>,
    k: usize,
    bin_width: f64,
    tokenizer: &Tokenizer,
) -> Result<GainAnalysis, EvalError> {
    let mut pipeline_names: Vec<String> = Vec::new();
    for (name, _) in inputs.first().map(|i| i.runs.as_slice()).unwrap_or(&[]) {
        if *name != baseline {
            pipeline_names.push(name.to_string());
        }
    }
    // (pipeline, bin) -> accumulated per-dataset deltas and relative gains.
    #[derive(Default)]
    struct Cell {
        delta_sum: f64,
        delta_n: usize,
        rel_sum: f64,
        rel_n: usize,
    }
    let mut cells: BTreeMap<(String, i64), Cell> = BTreeMap::new();
    let mut zero_baseline_cells = 0usize;

    for input in inputs {
        let find = |name: &str| -> Result<&[ExtractionResult], EvalError> {
            input
                .runs
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, r)| *r)
                .ok_or_else(|| EvalError::UnknownPipeline {
                    name: name.to_string(),
                })
        };
        let base_results = find(baseline)?;
        // Bin assignment for scored documents only, keyed by id.
        let mut doc_bins: BTreeMap<&str, i64> = BTreeMap::new();
        for doc in input.corpus {
            doc_bins.insert(
                doc.id.as_str(),
                bin_index(tokenizer.count(&doc.document), bin_width),
            );
        }
        // Per-bin mean F1 for one pipeline on this dataset.
        let bin_means = |results: &[ExtractionResult]| -> Result<BTreeMap<i64, f64>, EvalError> {
            let mut sums: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
            for (doc_id, f1) in per_document_f1(results, input.corpus, k)? {
                let bin = doc_bins[doc_id.as_str()];
                let slot = sums.entry(bin).or_insert((0.0, 0));
                slot.0 += f1;
                slot.1 += 1;
            }
            Ok(sums
                .into_iter()
                .map(|(bin, (sum, n))| (bin, sum / n as f64))
                .collect())
        };
        let base_means = bin_means(base_results)?;
        for name in &pipeline_names {
            let means = bin_means(find(name)?)?;
            for (&bin, &f1) in &means {
                let base = base_means[&bin];
                let cell = cells.entry((name.clone(), bin)).or_default();
                cell.delta_sum += f1 - base;
                cell.delta_n += 1;
                if base > 0.0 {
                    cell.rel_sum += (f1 - base) / base;
                    cell.rel_n += 1;
                } else {
                    zero_baseline_cells += 1;
                }
            }
        }
    }

    let pipelines: Vec<PipelineGain> = pipeline_names
        .iter()
        .map(|name| {
            let points = cells
                .iter()
                .filter(|((n, _), _)| n == name)
                .map(|((_, bin), cell)| GainPoint {
                    bin: *bin,
                    center_ln: bin_center(*bin, bin_width),
                    datasets: cell.delta_n,
                    delta_avg: cell.delta_sum / cell.delta_n as f64,
                    rel_avg: (cell.rel_n > 0).then(|| cell.rel_sum / cell.rel_n as f64),
                })
                .collect();
            PipelineGain {
                pipeline: name.clone(),
                points,
            }
        })
        .collect();

    let pair = match pair {
        None => None,
        Some((first, second)) => {
            let gains_of = |name: &str| -> Result<&PipelineGain, EvalError> {
                pipelines
                    .iter()
                    .find(|p| p.pipeline == name)
                    .ok_or_else(|| EvalError::UnknownPipeline {
                        name: name.to_string(),
                    })
            };
            let a = gains_of(first)?;
            let b = gains_of(second)?;
            let by_bin: BTreeMap<i64, f64> = b
                .points
                .iter()
                .filter_map(|p| p.rel_avg.map(|r| (p.bin, r)))
                .collect();
            let points: Vec<PairPoint> = a
                .points
                .iter()
                .filter_map(|p| {
                    let ra = p.rel_avg?;
                    let rb = by_bin.get(&p.bin)?;
                    Some(PairPoint {
                        bin: p.bin,
                        center_ln: p.center_ln,
                        rel_gain_gap: ra - rb,
                    })
                })
                .collect();
            let (sign_flips, transition_interval) = transition_from_points(&points);
            Some(PairComparison {
                first: first.to_string(),
                second: second.to_string(),
                points,
                sign_flips,
                transition_interval,
            })
        }
    };

    Ok(GainAnalysis {
        k,
        bin_width,
        baseline: baseline.to_string(),
        pipelines,
        zero_baseline_cells,
        pair,
    })
}

/// Where a token threshold sits relative to a transition interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub threshold_tokens: usize,
    pub ln_threshold: f64,
    pub interval: Option<(f64, f64)>,
    /// True when the interval exists and contains ln(threshold).
    pub inside: bool,
    /// |ln(threshold) − interval midpoint| when the interval exists.
    pub midpoint_distance: Option<f64>,
}

pub fn check_threshold(threshold_tokens: usize, interval: Option<(f64, f64)>) -> ThresholdCheck {
    let ln_threshold = (threshold_tokens.max(1) as f64).ln();
    let inside = interval
        .map(|(lo, hi)| lo <= ln_threshold && ln_threshold <= hi)
        .unwrap_or(false);
    let midpoint_distance = interval.map(|(lo, hi)| (ln_threshold - (lo + hi) / 2.0).abs());
    ThresholdCheck {
        threshold_tokens,
        ln_threshold,
        interval,
        inside,
        midpoint_distance,
    }
}
