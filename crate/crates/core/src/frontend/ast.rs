//! Arena-backed syntax tree.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Closed set of node kinds. Path vocabularies are sized from this list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Module,
    FuncDecl,
    Param,
    Block,
    Assign,
    VarDecl,
    If,
    Loop,
    Return,
    ExprStmt,
    Call,
    BinOp,
    UnaryOp,
    Identifier,
    IntLit,
    BoolLit,
}

impl NodeKind {
    pub const ALL: [NodeKind; 16] = [
        NodeKind::Module,
        NodeKind::FuncDecl,
        NodeKind::Param,
        NodeKind::Block,
        NodeKind::Assign,
        NodeKind::VarDecl,
        NodeKind::If,
        NodeKind::Loop,
        NodeKind::Return,
        NodeKind::ExprStmt,
        NodeKind::Call,
        NodeKind::BinOp,
        NodeKind::UnaryOp,
        NodeKind::Identifier,
        NodeKind::IntLit,
        NodeKind::BoolLit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Module => "Module",
            NodeKind::FuncDecl => "FuncDecl",
            NodeKind::Param => "Param",
            NodeKind::Block => "Block",
            NodeKind::Assign => "Assign",
            NodeKind::VarDecl => "VarDecl",
            NodeKind::If => "If",
            NodeKind::Loop => "Loop",
            NodeKind::Return => "Return",
            NodeKind::ExprStmt => "ExprStmt",
            NodeKind::Call => "Call",
            NodeKind::BinOp => "BinOp",
            NodeKind::UnaryOp => "UnaryOp",
            NodeKind::Identifier => "Identifier",
            NodeKind::IntLit => "IntLit",
            NodeKind::BoolLit => "BoolLit",
        }
    }

    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::Assign
                | NodeKind::VarDecl
                | NodeKind::If
                | NodeKind::Loop
                | NodeKind::Return
                | NodeKind::ExprStmt
        )
    }

    pub fn is_expression(self) -> bool {
        matches!(
            self,
            NodeKind::Call
                | NodeKind::BinOp
                | NodeKind::UnaryOp
                | NodeKind::Identifier
                | NodeKind::IntLit
                | NodeKind::BoolLit
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    pub line: usize,
    /// BinOp / UnaryOp only.
    pub op_text: Option<String>,
    /// Identifier / FuncDecl / Param / VarDecl only.
    pub name: Option<String>,
    /// Literal spelling for IntLit / BoolLit.
    pub literal: Option<String>,
}

/// Child layout per kind:
/// - `FuncDecl`: `Param*`, `Block`
/// - `Assign` / `VarDecl`: target `Identifier`, value expression
/// - `If`: condition, then-`Block`, optional else-`Block`
/// - `Loop`: condition, body `Block`
/// - `Return`: optional expression
/// - `ExprStmt`: `Call`
/// - `Call`: callee `Identifier`, arguments
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub nodes: Vec<AstNode>,
    pub root: NodeId,
    pub functions: BTreeMap<String, NodeId>,
    pub parent_of: Vec<Option<NodeId>>,
    pub line_count: usize,
}

impl Ast {
    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id.0]
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent_of[id.0]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    /// `id` followed by its ancestors up to the root.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(Some(id), move |&n| self.parent(n))
    }

    pub fn enclosing_function(&self, id: NodeId) -> Option<NodeId> {
        self.ancestors(id)
            .find(|&n| self.kind(n) == NodeKind::FuncDecl)
    }

    /// Innermost statement (or FuncDecl / Param) containing `id`.
    pub fn enclosing_statement(&self, id: NodeId) -> Option<NodeId> {
        self.ancestors(id).find(|&n| {
            let k = self.kind(n);
            k.is_statement() || k == NodeKind::FuncDecl || k == NodeKind::Param
        })
    }

    /// Pre-order traversal from `id`.
    pub fn preorder(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            for &c in self.children(n).iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// The value expression carried by a statement anchored on a line:
    /// right-hand side, returned value, called expression, or condition.
    pub fn statement_expression(&self, stmt: NodeId) -> Option<NodeId> {
        let node = self.node(stmt);
        match node.kind {
            NodeKind::Assign | NodeKind::VarDecl => node.children.get(1).copied(),
            NodeKind::Return | NodeKind::ExprStmt | NodeKind::If | NodeKind::Loop => {
                node.children.first().copied()
            }
            _ => None,
        }
    }

    /// Structural fingerprint used by round-trip checks: kinds, names, operators,
    /// literals, and child order, ignoring line numbers.
    pub fn shape(&self) -> String {
        let mut out = String::new();
        self.shape_into(self.root, &mut out);
        out
    }

    fn shape_into(&self, id: NodeId, out: &mut String) {
        let n = self.node(id);
        out.push('(');
        out.push_str(n.kind.name());
        for extra in [&n.name, &n.op_text, &n.literal].into_iter().flatten() {
            out.push(' ');
            out.push_str(extra);
        }
        for &c in &n.children {
            out.push(' ');
            self.shape_into(c, out);
        }
        out.push(')');
    }
}
