//! Recursive line representations and the line classifier.
//!
//! A line's vector is assembled from, for every token on it, a define
//! vector (the representation of the line where the token was last
//! defined, computed recursively; a learned row for operators and
//! built-ins; a fixed vector when nothing is known) and a context vector
//! (the syntax-tree path to that definition, read by a bi-LSTM with
//! attention). Context vectors are fused by one feed-forward network, then
//! a second network combines the fused context with the define vectors.
//! A third network classifies the result.

mod config;
mod forward;
mod io;
mod plan;
mod prepare;

pub use config::{ModelConfig, Variant};
pub use forward::{BatchResult, ForwardCache};
pub use io::{load_model, save_model, ModelMeta};
pub use plan::{build_plan, Plan, PlanNode, PlanSlot, SlotDefine};
pub use prepare::{DefineSource, PreparedProgram, TokenSlot};

use crate::dependence::{DependenceError, Vocab};
use crate::nn::{init, Activation, BatchNorm, BiLstm, BlockDense, Dense, Embedding, NnError, ParamId, ParamStore};
use crate::seed;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    ConfigConflict(String),
    #[error("recursion depth {depth} exceeded while representing line {line}")]
    RecursionDepthExceeded { line: usize, depth: usize },
    #[error("line {line} is not represented (program has {represented} representable lines)")]
    LineNotRepresented { line: usize, represented: usize },
    #[error(transparent)]
    Dependence(#[from] DependenceError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("model file: {0}")]
    Io(String),
}

/// Network layers, all registered in one [`ParamStore`].
#[derive(Debug, Clone)]
pub(crate) struct Layers {
    pub embed: Embedding,
    pub bilstm: BiLstm,
    pub readout: Dense,
    pub ffn_a_hidden: BlockDense,
    pub ffn_a_bn: BatchNorm,
    pub ffn_a_out: Dense,
    pub ffn_b_hidden: BlockDense,
    pub ffn_b_bn: BatchNorm,
    pub ffn_b_out: Dense,
    pub ffn_c_hidden: Dense,
    pub ffn_c_out: Dense,
    /// One-hot projection for operators and built-ins.
    pub e_op: Option<ParamId>,
    /// Fixed vector for tokens without a usable definition.
    pub undefined: Option<ParamId>,
}

#[derive(Debug, Clone)]
pub struct VulcanModel {
    pub cfg: ModelConfig,
    pub vocab: Vocab,
    pub store: ParamStore,
    pub(crate) layers: Layers,
}

impl VulcanModel {
    /// Fresh parameters drawn from the `init` sub-seed of `seed`.
    pub fn new(cfg: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = seed::rng_for(seed, seed::INIT);
        let mut store = ParamStore::new();
        let h = cfg.lstm_hidden;
        let embed = Embedding::new(&mut store, "path.embed", vocab.node_kind_size(), cfg.path_embed, &mut rng);
        let bilstm = BiLstm::new(&mut store, "path.lstm", cfg.path_embed, h, &mut rng);
        let readout = if cfg.no_attn {
            Dense::new(&mut store, "path.readout_final", 2 * h, cfg.path_repr, Activation::Tanh, &mut rng)
        } else {
            Dense::new(&mut store, "path.readout_attn", 4 * h, cfg.path_repr, Activation::Tanh, &mut rng)
        };
        let slots = cfg.max_tokens_per_line;
        let ffn_a_hidden = BlockDense::new(&mut store, "ffn_a.hidden", vec![cfg.path_repr; slots], cfg.ffn_hidden, &mut rng);
        let ffn_a_bn = BatchNorm::new(&mut store, "ffn_a.bn", cfg.ffn_hidden);
        let ffn_a_out = Dense::new(&mut store, "ffn_a.out", cfg.ffn_hidden, cfg.q, Activation::Tanh, &mut rng);
        let b_widths = if cfg.no_endpoints {
            vec![cfg.q]
        } else {
            let mut w = vec![cfg.t; slots];
            w.push(cfg.q);
            w
        };
        let ffn_b_hidden = BlockDense::new(&mut store, "ffn_b.hidden", b_widths, cfg.ffn_hidden, &mut rng);
        let ffn_b_bn = BatchNorm::new(&mut store, "ffn_b.bn", cfg.ffn_hidden);
        let ffn_b_out = Dense::new(&mut store, "ffn_b.out", cfg.ffn_hidden, cfg.t, Activation::Tanh, &mut rng);
        let ffn_c_hidden = Dense::new(&mut store, "ffn_c.hidden", cfg.t, cfg.classifier_hidden, Activation::Relu, &mut rng);
        let ffn_c_out = Dense::new(&mut store, "ffn_c.out", cfg.classifier_hidden, 2, Activation::Identity, &mut rng);
        let (e_op, undefined) = if cfg.no_endpoints {
            (None, None)
        } else {
            let n = vocab.one_hot_size();
            let e = store.register("define.e_op", init::glorot_uniform(&mut rng, n, cfg.t, &[n, cfg.t]), true);
            let u = store.register("define.u", init::uniform(&mut rng, 1.0, &[cfg.t]), false);
            (Some(e), Some(u))
        };
        Ok(VulcanModel {
            cfg,
            vocab,
            store,
            layers: Layers {
                embed,
                bilstm,
                readout,
                ffn_a_hidden,
                ffn_a_bn,
                ffn_a_out,
                ffn_b_hidden,
                ffn_b_bn,
                ffn_b_out,
                ffn_c_hidden,
                ffn_c_out,
                e_op,
                undefined,
            },
        })
    }

    pub fn prepare(&self, id: &str, source: &str) -> Result<PreparedProgram, ModelError> {
        PreparedProgram::from_source(id, source, &self.vocab, &self.cfg)
    }

    pub fn prepare_ast(&self, id: &str, ast: crate::frontend::Ast) -> Result<PreparedProgram, ModelError> {
        PreparedProgram::new(id, ast, &self.vocab, &self.cfg)
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.store.names()
    }
}
