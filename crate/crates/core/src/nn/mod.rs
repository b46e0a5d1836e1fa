//! A small differentiable kernel in 64-bit floats.
//!
//! Layers own [`ParamId`]s into a shared [`ParamStore`]. Each layer's
//! `forward` returns its output and a cache; `backward` consumes the cache,
//! accumulates parameter gradients into the store, and returns the input
//! gradient. Matrix kernels compute every output row from its own input row
//! in a fixed order, so a row's value never depends on the batch around it.

pub mod adagrad;
pub mod attention;
pub mod batchnorm;
pub mod checkpoint;
pub mod dense;
pub mod embedding;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod lstm;
pub mod params;
pub mod tensor;

pub use adagrad::Adagrad;
pub use attention::{dot_attention, dot_attention_backward};
pub use batchnorm::{BatchNorm, BatchNormCache, BnMode};
pub use dense::{dense, Activation, BlockDense, BlockRow, Dense};
pub use embedding::Embedding;
pub use gradcheck::{finite_diff_check, finite_diff_report, relative_error, GradCheckReport};
pub use loss::weighted_xent;
pub use lstm::{lstm_cell, BiLstm, CellOutput, Lstm};
pub use params::{ParamId, ParamStore, Parameter};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("{op}: shape mismatch, expected {expected}, found {found}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("empty sequence")]
    EmptySequence,
    #[error("batch normalization needs at least 2 rows in training mode, got {batch}")]
    BatchTooSmall { batch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
