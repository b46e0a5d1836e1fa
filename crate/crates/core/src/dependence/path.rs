use super::{defining_node, TokenOccurrence, MAX_PATH_LEN};
use crate::frontend::{Ast, NodeId, NodeKind};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub kind: NodeKind,
    pub direction: Direction,
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.direction {
            Direction::Up => '^',
            Direction::Down => 'v',
        };
        write!(f, "{}{}", self.kind, arrow)
    }
}

/// Walk from a use up to the lowest common ancestor (inclusive, marked Up)
/// and down to the definition (marked Down).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstPath {
    pub steps: Vec<PathStep>,
    /// Raw length exceeds the encoding cap.
    pub truncated: bool,
}

impl AstPath {
    pub fn new(steps: Vec<PathStep>) -> Self {
        let truncated = steps.len() > MAX_PATH_LEN;
        AstPath { steps, truncated }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn contains_kind(&self, kind: NodeKind) -> bool {
        self.steps.iter().any(|s| s.kind == kind)
    }

    /// Directions form `Up* Down*`.
    pub fn is_up_then_down(&self) -> bool {
        let first_down = self
            .steps
            .iter()
            .position(|s| s.direction == Direction::Down)
            .unwrap_or(self.steps.len());
        self.steps[first_down..]
            .iter()
            .all(|s| s.direction == Direction::Down)
    }

    /// Space-separated rendering, e.g. `Identifier^ Assign^ Block^ Assign v`.
    pub fn render(&self) -> String {
        self.steps
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Tree walk between two nodes of the same AST.
pub fn path_between(ast: &Ast, from: NodeId, to: NodeId) -> AstPath {
    let up: Vec<NodeId> = ast.ancestors(from).collect();
    let down: Vec<NodeId> = ast.ancestors(to).collect();
    // both chains end at the root, so a common ancestor always exists
    let (up_idx, down_idx) = up
        .iter()
        .enumerate()
        .find_map(|(i, n)| down.iter().position(|m| m == n).map(|j| (i, j)))
        .expect("nodes of one module share the root");

    let mut steps: Vec<PathStep> = up[..=up_idx]
        .iter()
        .map(|&n| PathStep {
            kind: ast.kind(n),
            direction: Direction::Up,
        })
        .collect();
    steps.extend(down[..down_idx].iter().rev().map(|&n| PathStep {
        kind: ast.kind(n),
        direction: Direction::Down,
    }));
    AstPath::new(steps)
}

/// Path from a token occurrence to its defining occurrence on line `ep`.
/// `None` when nothing on `ep` defines the token.
pub fn extract_ast_path(occ: &TokenOccurrence, ep: usize, ast: &Ast) -> Option<AstPath> {
    let target = defining_node(occ, ep, ast)?;
    Some(path_between(ast, occ.node, target))
}
