//! Bag-of-words logistic-regression baselines.

use super::metrics::{Metrics, Ratio};
use super::train::epoch_sample;
use super::{ClassWeightRule, ExperimentConfig, HarnessError};
use crate::corpus::{line_examples, CorpusRecord, Split};
use crate::dependence::{get_path_with_mode, line_tokens, EndpointMode, PathOrOneHot, MAX_TOKENS_PER_LINE};
use crate::frontend::{parse_source, tokenize};
use crate::model::ModelError;
use crate::nn::{weighted_xent, Adagrad, ParamStore, Tensor};
use crate::seed::{rng_for, SHUFFLE};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub const UNK_FEATURE: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Lexical tokens of the line.
    LineTokens,
    /// Node kinds on the line's context paths.
    AstNodes,
    /// Each context path rendered as one string.
    AstPathStrings,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 3] = [FeatureMode::LineTokens, FeatureMode::AstNodes, FeatureMode::AstPathStrings];

    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::LineTokens => "bow_tokens",
            FeatureMode::AstNodes => "bow_ast_nodes",
            FeatureMode::AstPathStrings => "bow_ast_paths",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tokens" | "bow_tokens" => Ok(FeatureMode::LineTokens),
            "nodes" | "bow_ast_nodes" => Ok(FeatureMode::AstNodes),
            "paths" | "bow_ast_paths" => Ok(FeatureMode::AstPathStrings),
            other => Err(format!("unknown feature mode `{other}`")),
        }
    }
}

/// Optimizer settings shared with the neural model.
pub type BowConfig = ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowModel {
    pub feature_mode: FeatureMode,
    /// Feature to weight index; `<unk>` is index 0.
    pub vocabulary: BTreeMap<String, usize>,
    /// One weight per vocabulary entry, bias last.
    pub weights: Vec<f64>,
}

/// Features of the given lines of one program, one multiset per line.
pub fn line_features(source: &str, lines: &[usize], mode: FeatureMode) -> Result<Vec<Vec<String>>, HarnessError> {
    match mode {
        FeatureMode::LineTokens => {
            let tokens = tokenize(source)?;
            Ok(lines
                .iter()
                .map(|&l| tokens.iter().filter(|t| t.line == l).map(|t| t.text.clone()).collect())
                .collect())
        }
        FeatureMode::AstNodes | FeatureMode::AstPathStrings => {
            let ast = parse_source(source)?;
            lines
                .iter()
                .map(|&l| {
                    let mut feats = Vec::new();
                    for occ in line_tokens(&ast, l, MAX_TOKENS_PER_LINE).map_err(ModelError::from)? {
                        let (_, what) = get_path_with_mode(&occ, l, &ast, EndpointMode::MostRecentDefinition)
                            .map_err(ModelError::from)?;
                        if let PathOrOneHot::Path(p) = what {
                            if mode == FeatureMode::AstNodes {
                                feats.extend(p.steps.iter().map(|s| s.kind.to_string()));
                            } else {
                                feats.push(p.render());
                            }
                        }
                    }
                    Ok(feats)
                })
                .collect()
        }
    }
}

type Sparse = Vec<(usize, f64)>;

impl BowModel {
    fn bias_index(&self) -> usize {
        self.weights.len() - 1
    }

    /// Count vector over the vocabulary; unknown features share `<unk>`.
    pub fn vectorize(&self, feats: &[String]) -> Sparse {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for f in feats {
            let i = self.vocabulary.get(f).copied().unwrap_or(0);
            *counts.entry(i).or_default() += 1.0;
        }
        counts.into_iter().collect()
    }

    fn logit(&self, x: &Sparse) -> f64 {
        x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>() + self.weights[self.bias_index()]
    }

    pub fn probability(&self, feats: &[String]) -> f64 {
        let z = self.logit(&self.vectorize(feats));
        1.0 / (1.0 + (-z).exp())
    }

    pub fn evaluate(&self, records: &[CorpusRecord], split: Split) -> Result<Metrics, HarnessError> {
        let data = featurize(records, split, self.feature_mode)?;
        Ok(self.metrics(&data))
    }

    fn metrics(&self, data: &[(u8, Vec<String>)]) -> Metrics {
        let labels: Vec<u8> = data.iter().map(|d| d.0).collect();
        let probs: Vec<f64> = data.iter().map(|d| self.probability(&d.1)).collect();
        Metrics::from_predictions(&labels, &probs)
    }
}

fn featurize(records: &[CorpusRecord], split: Split, mode: FeatureMode) -> Result<Vec<(u8, Vec<String>)>, HarnessError> {
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.split == split) {
        let lines: Vec<usize> = r.labels.iter().map(|l| l.line).collect();
        let feats = line_features(&r.source, &lines, mode)?;
        out.extend(r.labels.iter().map(|l| l.label).zip(feats));
    }
    Ok(out)
}

/// Logistic regression on count features with the neural model's
/// subsampling, class weights, optimizer, and early stopping.
pub fn train_bow(records: &[CorpusRecord], mode: FeatureMode, cfg: &BowConfig) -> Result<BowModel, HarnessError> {
    cfg.validate()?;
    for split in [Split::Train, Split::Val] {
        if !records.iter().any(|r| r.split == split) {
            return Err(HarnessError::EmptySplit(split));
        }
    }
    let all_train = line_examples(records, Split::Train);
    let positives = all_train.iter().filter(|e| e.label == 1).count();
    if positives == 0 || positives == all_train.len() {
        return Err(HarnessError::DegenerateTraining(format!(
            "train split has {positives} positive and {} negative lines",
            all_train.len() - positives
        )));
    }

    // features of every train line, keyed like the examples
    let mut train_feats: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate().filter(|(_, r)| r.split == Split::Train) {
        let lines: Vec<usize> = r.labels.iter().map(|l| l.line).collect();
        for (l, f) in lines.iter().zip(line_features(&r.source, &lines, mode)?) {
            train_feats.insert((i, *l), f);
        }
    }
    let mut vocabulary = BTreeMap::from([(UNK_FEATURE.to_string(), 0)]);
    for f in train_feats.values().flatten() {
        let next = vocabulary.len();
        vocabulary.entry(f.clone()).or_insert(next);
    }
    let mut model = BowModel {
        feature_mode: mode,
        weights: vec![0.0; vocabulary.len() + 1],
        vocabulary,
    };

    let examples = epoch_sample(&all_train, cfg, 1);
    let n_pos = examples.iter().filter(|e| e.label == 1).count();
    let n_neg = examples.len() - n_pos;
    let weights = match cfg.class_weights {
        ClassWeightRule::InverseFrequency => [1.0, n_neg as f64 / n_pos.max(1) as f64],
        ClassWeightRule::Uniform => [1.0, 1.0],
    };
    let train_vectors: BTreeMap<(usize, usize), Sparse> =
        train_feats.iter().map(|(k, f)| (*k, model.vectorize(f))).collect();
    let val = featurize(records, Split::Val, mode)?;

    let mut store = ParamStore::new();
    let w = store.register("bow.weights", Tensor::zeros(&[model.weights.len()]), true);
    let mut opt = Adagrad::new(&store, cfg.lr, cfg.eps);
    let mut rng = rng_for(cfg.seed, SHUFFLE);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut since_best = 0;
    let bias = model.bias_index();

    for epoch in 1..=cfg.max_epochs {
        let sample = if epoch == 1 { examples.clone() } else { epoch_sample(&all_train, cfg, epoch) };
        let vectors: Vec<(&Sparse, usize)> =
            sample.iter().map(|e| (&train_vectors[&(e.record, e.line)], e.label as usize)).collect();
        let mut order: Vec<usize> = (0..vectors.len()).collect();
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut logits = Tensor::zeros(&[batch.len(), 2]);
            let mut labels = Vec::with_capacity(batch.len());
            for (row, &k) in batch.iter().enumerate() {
                logits.row_mut(row)[1] = model.logit(&vectors[k].0);
                labels.push(vectors[k].1);
            }
            let (_, dlogits) = weighted_xent(&logits, &labels, &weights).map_err(ModelError::from)?;
            let grad = store.grad_mut(w);
            for (row, &k) in batch.iter().enumerate() {
                // the class-0 logit is pinned at zero, so only column 1 matters
                let dz = dlogits.row(row)[1];
                for &(i, v) in vectors[k].0 {
                    grad.data[i] += dz * v;
                }
                grad.data[bias] += dz;
            }
            opt.step(&mut store);
            model.weights.copy_from_slice(&store.value(w).data);
        }
        let f1 = model.metrics(&val).f1;
        let score = match f1 {
            Ratio::Value(v) => v,
            _ => 0.0,
        };
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, model.weights.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.weights = best.expect("at least one epoch").1;
    Ok(model)
}
