//! Model training with early stopping on validation F1, and evaluation.

use super::metrics::{Metrics, Ratio};
use super::{ClassWeightRule, ExperimentConfig, HarnessError};
use crate::corpus::{line_examples, subsample_negatives, CorpusRecord, LineExample, Split};
use crate::dependence::build_vocabs;
use crate::model::{PreparedProgram, VulcanModel};
use crate::nn::Adagrad;
use crate::seed::{rng_for, sub_seed, SHUFFLE};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean weighted loss over the epoch's training lines.
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub class_weights: [f64; 2],
    pub train_positives: usize,
    pub train_negatives: usize,
}

/// The negative subsample used in `epoch` (1-based). Every epoch keeps all
/// positives and the same number of negatives.
pub(super) fn epoch_sample(eligible: &[LineExample], cfg: &ExperimentConfig, epoch: usize) -> Vec<LineExample> {
    let seed = if epoch == 1 { cfg.seed } else { sub_seed(cfg.seed, &format!("epoch/{epoch}")) };
    subsample_negatives(eligible, cfg.subsample_ratio, seed)
}

/// Split records prepared for one model; `None` for records outside the
/// requested splits.
fn prepare_split(
    model: &VulcanModel,
    records: &[CorpusRecord],
    splits: &[Split],
) -> Result<Vec<Option<PreparedProgram>>, HarnessError> {
    records
        .iter()
        .map(|r| {
            if splits.contains(&r.split) {
                Ok(Some(model.prepare(&r.id, &r.source)?))
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Train on the train split and keep the parameters of the epoch with the
/// best validation F1 (ties broken by lower validation loss).
pub fn train(records: &[CorpusRecord], cfg: &ExperimentConfig) -> Result<(VulcanModel, TrainingLog), HarnessError> {
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

    let train_asts = records
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| r.program().parse())
        .collect::<Result<Vec<_>, _>>()?;
    let vocab = build_vocabs(&train_asts, cfg.model.endpoint_mode()).map_err(crate::model::ModelError::from)?;
    let mut model = VulcanModel::new(cfg.model.clone(), vocab, cfg.seed)?;
    let prepared = prepare_split(&model, records, &[Split::Train, Split::Val])?;

    // Lines past the cap have no representation to train on.
    let eligible: Vec<LineExample> = all_train
        .into_iter()
        .filter(|e| prepared[e.record].as_ref().is_some_and(|p| e.line <= p.represented_lines()))
        .collect();
    let first = epoch_sample(&eligible, cfg, 1);
    let n_pos = first.iter().filter(|e| e.label == 1).count();
    let n_neg = first.len() - n_pos;
    let weights = match cfg.class_weights {
        ClassWeightRule::InverseFrequency => [1.0, n_neg as f64 / n_pos.max(1) as f64],
        ClassWeightRule::Uniform => [1.0, 1.0],
    };

    let mut opt = Adagrad::new(&model.store, cfg.lr, cfg.eps);
    let mut rng = rng_for(cfg.seed, SHUFFLE);
    let mut log = TrainingLog {
        epochs: Vec::new(),
        best_epoch: 0,
        class_weights: weights,
        train_positives: n_pos,
        train_negatives: n_neg,
    };
    let mut best: Option<(f64, f64, VulcanModel)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        // A fresh negative sample each epoch, all of the same size, so every
        // negative line is seen over a run.
        let examples = if epoch == 1 { first.clone() } else { epoch_sample(&eligible, cfg, epoch) };
        let mut by_program: BTreeMap<usize, Vec<LineExample>> = BTreeMap::new();
        for e in &examples {
            by_program.entry(e.record).or_default().push(*e);
        }
        // Batches follow a shuffled program order so that lines sharing
        // definitions land in the same batch and share memoized work.
        let mut order: Vec<usize> = by_program.keys().copied().collect();
        order.shuffle(&mut rng);
        let mut epoch_lines = Vec::with_capacity(examples.len());
        for rec in order {
            let mut lines = by_program[&rec].clone();
            lines.shuffle(&mut rng);
            epoch_lines.extend(lines);
        }

        let mut loss_sum = 0.0;
        for batch in epoch_lines.chunks(cfg.batch_size) {
            let mut local: Vec<usize> = Vec::new();
            let mut triples = Vec::with_capacity(batch.len());
            for e in batch {
                let idx = match local.iter().position(|&r| r == e.record) {
                    Some(i) => i,
                    None => {
                        local.push(e.record);
                        local.len() - 1
                    }
                };
                triples.push((idx, e.line, e.label as usize));
            }
            let progs: Vec<&PreparedProgram> = local
                .iter()
                .map(|&r| prepared[r].as_ref().expect("train program prepared"))
                .collect();
            let result = model.train_batch(&progs, &triples, &weights)?;
            opt.step(&mut model.store);
            loss_sum += result.loss * batch.len() as f64;
        }

        let (val, val_loss) = evaluate_prepared(&model, records, &prepared, Split::Val, &weights)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss: loss_sum / epoch_lines.len().max(1) as f64,
            val_loss,
            val_f1: val.f1,
        });
        let f1 = val.f1.or_zero();
        let improved = match &best {
            None => true,
            Some((bf, bl, _)) => f1 > *bf || (f1 == *bf && val_loss < *bl),
        };
        if improved {
            best = Some((f1, val_loss, model.clone()));
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let (_, _, best_model) = best.expect("at least one epoch");
    Ok((best_model, log))
}

/// Metrics and mean weighted loss over every labeled line of `split`.
fn evaluate_prepared(
    model: &VulcanModel,
    records: &[CorpusRecord],
    prepared: &[Option<PreparedProgram>],
    split: Split,
    weights: &[f64; 2],
) -> Result<(Metrics, f64), HarnessError> {
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    for (r, p) in records.iter().zip(prepared) {
        if r.split != split {
            continue;
        }
        let p = p.as_ref().expect("split program prepared");
        let represented: Vec<usize> = r.labels.iter().map(|l| l.line).filter(|&l| l <= p.represented_lines()).collect();
        let predicted = if represented.is_empty() {
            Vec::new()
        } else {
            model.predict(p, &represented)?
        };
        let mut it = predicted.into_iter();
        for l in &r.labels {
            labels.push(l.label);
            // lines past the cap have no representation and count as negative
            probs.push(if l.line <= p.represented_lines() { it.next().expect("one per line") } else { 0.0 });
        }
    }
    let mut loss = 0.0;
    let mut wsum = 0.0;
    for (&y, &p) in labels.iter().zip(&probs) {
        let w = weights[y as usize];
        let py = if y == 1 { p } else { 1.0 - p };
        loss -= w * py.max(1e-300).ln();
        wsum += w;
    }
    let loss = if wsum > 0.0 { loss / wsum } else { 0.0 };
    Ok((Metrics::from_predictions(&labels, &probs), loss))
}

/// Threshold-0.5 metrics over every labeled line of `split`.
pub fn evaluate(model: &VulcanModel, records: &[CorpusRecord], split: Split) -> Result<Metrics, HarnessError> {
    if !records.iter().any(|r| r.split == split) {
        return Err(HarnessError::EmptySplit(split));
    }
    let prepared = prepare_split(model, records, &[split])?;
    Ok(evaluate_prepared(model, records, &prepared, split, &[1.0, 1.0])?.0)
}
