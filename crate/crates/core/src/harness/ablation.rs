//! Multi-seed runs of model variants and baselines, and their results files.

use super::bow::{train_bow, FeatureMode};
use super::metrics::{median, Metrics, Ratio};
use super::train::{evaluate, train};
use super::{ExperimentConfig, HarnessError};
use crate::corpus::{CorpusRecord, Split};
use crate::model::Variant;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Variant name or baseline name.
    pub name: String,
    pub seed: u64,
    pub val: Metrics,
    pub test: Option<Metrics>,
    pub config: ExperimentConfig,
    pub best_epoch: Option<usize>,
}

/// Median metrics of one variant or baseline across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub runs: usize,
    pub fpr: Ratio,
    pub fnr: Ratio,
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsSummary {
    pub config: ExperimentConfig,
    pub corpus_sha256: String,
    pub split: Split,
    pub rows: Vec<SummaryRow>,
    pub runs: Vec<RunResult>,
}

fn test_metrics(
    records: &[CorpusRecord],
    eval: impl Fn(Split) -> Result<Metrics, HarnessError>,
) -> Result<Option<Metrics>, HarnessError> {
    if records.iter().any(|r| r.split == Split::Test) {
        eval(Split::Test).map(Some)
    } else {
        Ok(None)
    }
}

/// Train every variant under every seed with otherwise identical settings.
pub fn run_ablation_suite(
    records: &[CorpusRecord],
    base: &ExperimentConfig,
    variants: &[Variant],
    seeds: &[u64],
) -> Result<Vec<RunResult>, HarnessError> {
    let mut out = Vec::new();
    for &variant in variants {
        for &seed in seeds {
            let cfg = base.with_variant(variant)?.with_seed(seed);
            let (model, log) = train(records, &cfg)?;
            out.push(RunResult {
                name: variant.name().to_string(),
                seed,
                val: evaluate(&model, records, Split::Val)?,
                test: test_metrics(records, |s| evaluate(&model, records, s))?,
                config: cfg,
                best_epoch: Some(log.best_epoch),
            });
        }
    }
    Ok(out)
}

pub fn run_bow_suite(
    records: &[CorpusRecord],
    base: &ExperimentConfig,
    modes: &[FeatureMode],
    seeds: &[u64],
) -> Result<Vec<RunResult>, HarnessError> {
    let mut out = Vec::new();
    for &mode in modes {
        for &seed in seeds {
            let cfg = base.with_seed(seed);
            let bow = train_bow(records, mode, &cfg)?;
            out.push(RunResult {
                name: mode.name().to_string(),
                seed,
                val: bow.evaluate(records, Split::Val)?,
                test: test_metrics(records, |s| bow.evaluate(records, s))?,
                config: cfg,
                best_epoch: None,
            });
        }
    }
    Ok(out)
}

fn median_ratio(values: impl Iterator<Item = Ratio>, undefined_as_zero: bool) -> Ratio {
    let v: Vec<f64> = values
        .filter_map(|r| if undefined_as_zero { Some(r.or_zero()) } else { r.value() })
        .collect();
    if v.is_empty() {
        Ratio::UNDEFINED
    } else {
        Ratio::Value(median(&v))
    }
}

/// One row per name, in first-seen order, with medians over seeds. An
/// undefined F1 ranks as 0; other undefined ratios are left out of the
/// median.
pub fn summarize(results: &[RunResult], split: Split) -> Vec<SummaryRow> {
    let mut names: Vec<&str> = Vec::new();
    for r in results {
        if !names.contains(&r.name.as_str()) {
            names.push(&r.name);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let ms: Vec<Metrics> = results
                .iter()
                .filter(|r| r.name == name)
                .filter_map(|r| match split {
                    Split::Test => r.test,
                    _ => Some(r.val),
                })
                .collect();
            SummaryRow {
                name: name.to_string(),
                runs: ms.len(),
                fpr: median_ratio(ms.iter().map(|m| m.fpr), false),
                fnr: median_ratio(ms.iter().map(|m| m.fnr), false),
                precision: median_ratio(ms.iter().map(|m| m.precision), false),
                recall: median_ratio(ms.iter().map(|m| m.recall), false),
                f1: median_ratio(ms.iter().map(|m| m.f1), true),
            }
        })
        .collect()
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn results_csv(results: &[RunResult]) -> String {
    let mut out = String::from("variant,seed,split,tp,fp,tn,fn,fpr,fnr,precision,recall,f1\n");
    for r in results {
        let rows = [(Split::Val, Some(r.val)), (Split::Test, r.test)];
        for (split, m) in rows {
            let Some(m) = m else { continue };
            let _ = write!(out, "{},{},{},{},{},{},{}", r.name, r.seed, split, m.tp, m.fp, m.tn, m.fn_);
            for (_, v) in m.ratios() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_results_csv(path: &Path, results: &[RunResult]) -> Result<(), HarnessError> {
    write_atomic(path, results_csv(results).as_bytes())
}

pub fn write_summary_json(path: &Path, summary: &ResultsSummary) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    write_atomic(path, json.as_bytes())
}
