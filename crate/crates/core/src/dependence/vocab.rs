use super::{
    get_path_with_mode, line_tokens, AstPath, DependenceError, EndpointMode,
    PathOrOneHot, PathStep, TokenClass, MAX_PATH_LEN, MAX_TOKENS_PER_LINE,
};
use crate::frontend::{Ast, NodeKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Training-set vocabularies. Entries are indexed by position; each
/// vocabulary's UNK index is its length, so sizes include UNK.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Vocab {
    pub operators: Vec<String>,
    pub builtins: Vec<String>,
    pub node_kinds: Vec<PathStep>,
}

impl Vocab {
    pub fn operator_index(&self, text: &str) -> usize {
        self.operators
            .iter()
            .position(|o| o == text)
            .unwrap_or(self.operator_unk())
    }

    pub fn builtin_index(&self, text: &str) -> usize {
        self.builtins
            .iter()
            .position(|b| b == text)
            .unwrap_or(self.builtin_unk())
    }

    pub fn step_index(&self, step: PathStep) -> usize {
        self.node_kinds
            .iter()
            .position(|&s| s == step)
            .unwrap_or(self.node_kind_unk())
    }

    pub fn operator_unk(&self) -> usize {
        self.operators.len()
    }

    pub fn builtin_unk(&self) -> usize {
        self.builtins.len()
    }

    pub fn node_kind_unk(&self) -> usize {
        self.node_kinds.len()
    }

    pub fn operator_size(&self) -> usize {
        self.operators.len() + 1
    }

    pub fn builtin_size(&self) -> usize {
        self.builtins.len() + 1
    }

    pub fn node_kind_size(&self) -> usize {
        self.node_kinds.len() + 1
    }

    /// Width of the joint operator/built-in one-hot space.
    pub fn one_hot_size(&self) -> usize {
        self.operator_size() + self.builtin_size()
    }

    /// Index into the joint one-hot space: operators first, then built-ins.
    pub fn one_hot_index(&self, text: &str, class: TokenClass) -> usize {
        match class {
            TokenClass::BuiltinFunc => self.operator_size() + self.builtin_index(text),
            _ => self.operator_index(text),
        }
    }
}

/// Vocabularies over the operators, built-ins, and path steps observed in
/// `programs` (the training split).
pub fn build_vocabs(programs: &[Ast], mode: EndpointMode) -> Result<Vocab, DependenceError> {
    let mut operators = BTreeSet::new();
    let mut builtins = BTreeSet::new();
    let mut steps = BTreeSet::new();
    for ast in programs {
        for line in 1..=ast.line_count {
            for occ in line_tokens(ast, line, MAX_TOKENS_PER_LINE)? {
                match get_path_with_mode(&occ, line, ast, mode)?.1 {
                    PathOrOneHot::OneHot { text, class } => {
                        if class == TokenClass::BuiltinFunc {
                            builtins.insert(text);
                        } else {
                            operators.insert(text);
                        }
                    }
                    PathOrOneHot::Path(p) => steps.extend(p.steps),
                    PathOrOneHot::Empty => {}
                }
            }
        }
    }
    Ok(Vocab {
        operators: operators.into_iter().collect(),
        builtins: builtins.into_iter().collect(),
        node_kinds: steps.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedPath {
    pub indices: Vec<usize>,
    pub truncated: bool,
}

/// Map steps to vocabulary indices; paths over the cap keep the first and
/// last halves.
pub fn encode_path(path: &AstPath, vocab: &Vocab) -> EncodedPath {
    encode_path_capped(path, vocab, MAX_PATH_LEN)
}

/// [`encode_path`] with an explicit cap.
pub fn encode_path_capped(path: &AstPath, vocab: &Vocab, cap: usize) -> EncodedPath {
    let steps = &path.steps;
    let truncated = steps.len() > cap;
    let kept: Vec<PathStep> = if truncated {
        let head = cap / 2;
        let tail = cap - head;
        steps[..head]
            .iter()
            .chain(&steps[steps.len() - tail..])
            .copied()
            .collect()
    } else {
        steps.clone()
    };
    EncodedPath {
        indices: kept.into_iter().map(|s| vocab.step_index(s)).collect(),
        truncated,
    }
}

/// Upper bound on the step vocabulary: every kind in both directions, plus UNK.
pub const MAX_NODE_KIND_VOCAB: usize = 2 * NodeKind::ALL.len() + 1;
