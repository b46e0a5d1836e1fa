//! Training, evaluation, baselines, ablations, and the similarity study.

pub mod ablation;
mod bow;
mod metrics;
mod similarity;
mod train;

pub use ablation::{
    run_ablation_suite, run_bow_suite, summarize, write_results_csv, write_summary_json, ResultsSummary, RunResult,
    SummaryRow,
};
pub use bow::{line_features, train_bow, BowConfig, BowModel, FeatureMode};
pub use metrics::{mean_std, median, Metrics, Ratio};
pub use similarity::{similarity_experiment, write_similarity_csv, DistanceRow, PAIRS};
pub use train::{evaluate, train, EpochLog, TrainingLog};

use crate::corpus::{CorpusError, Split};
use crate::model::{ModelConfig, ModelError, Variant};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),
    #[error("the {0} split is empty")]
    EmptySplit(Split),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<crate::frontend::FrontendError> for HarnessError {
    fn from(e: crate::frontend::FrontendError) -> Self {
        HarnessError::Model(ModelError::from(crate::dependence::DependenceError::from(e)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeightRule {
    /// [1, N_neg / N_pos] on the subsampled training lines.
    InverseFrequency,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub lr: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub class_weights: ClassWeightRule,
    /// Negatives kept per positive training line.
    pub subsample_ratio: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelConfig::default(),
            lr: 0.05,
            eps: 1e-8,
            batch_size: 32,
            max_epochs: 20,
            patience: 5,
            class_weights: ClassWeightRule::InverseFrequency,
            subsample_ratio: 10.0,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model.validate()?;
        if !(self.lr > 0.0) || !(self.eps > 0.0) {
            return Err(HarnessError::InvalidConfig("lr and eps must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(HarnessError::InvalidConfig("batch size and epochs must be positive".into()));
        }
        if !(self.subsample_ratio >= 1.0) {
            return Err(HarnessError::InvalidConfig("subsample ratio must be at least 1".into()));
        }
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        self.model.variant()
    }

    /// The same experiment with the model switched to `variant`.
    pub fn with_variant(&self, variant: Variant) -> Result<ExperimentConfig, HarnessError> {
        Ok(ExperimentConfig {
            model: variant.apply(&self.model)?,
            ..self.clone()
        })
    }

    pub fn with_seed(&self, seed: u64) -> ExperimentConfig {
        ExperimentConfig { seed, ..self.clone() }
    }
}

#[cfg(test)]
mod tests;
