//! Labels recomputed from a parsed program, without generator bookkeeping.

use super::{LabeledLine, VulnClass};
use crate::dependence::definitions_in;
use crate::frontend::{Ast, NodeId, NodeKind};

/// One entry per assignment or declaration line, in line order. When a
/// line matches several classes the first of dead-after-call, unchecked
/// division, loop overflow wins.
pub fn label_oracle(ast: &Ast) -> Vec<LabeledLine> {
    let mut stmts: Vec<NodeId> = ast
        .preorder(ast.root)
        .into_iter()
        .filter(|&n| matches!(ast.kind(n), NodeKind::Assign | NodeKind::VarDecl))
        .collect();
    stmts.sort_by_key(|&n| ast.node(n).line);
    stmts
        .into_iter()
        .map(|s| {
            let vuln = if dead_after_call(ast, s) {
                Some(VulnClass::DeadAfterCall)
            } else if unchecked_division(ast, s) {
                Some(VulnClass::UncheckedDiv)
            } else if loop_overflow(ast, s) {
                Some(VulnClass::LoopOverflow)
            } else {
                None
            };
            LabeledLine::new(ast.node(s).line, vuln)
        })
        .collect()
}

fn calls(ast: &Ast, expr: NodeId, callee: &str) -> bool {
    ast.preorder(expr).into_iter().any(|n| {
        ast.kind(n) == NodeKind::Call && ast.node(ast.children(n)[0]).name.as_deref() == Some(callee)
    })
}

fn dead_after_call(ast: &Ast, stmt: NodeId) -> bool {
    let Some(block) = ast.parent(stmt) else {
        return false;
    };
    ast.children(block)
        .iter()
        .take_while(|&&s| s != stmt)
        .any(|&s| ast.statement_expression(s).is_some_and(|e| calls(ast, e, "ext_call")))
}

/// The node defining `ident` most recently before its line: a parameter or
/// an assignment/declaration statement.
fn reaching_definition(ast: &Ast, ident: NodeId) -> Option<NodeId> {
    let node = ast.node(ident);
    let name = node.name.as_deref()?;
    let func = ast.enclosing_function(ident)?;
    let (_, def) = definitions_in(ast, func, name)
        .filter(|&(l, _)| l < node.line)
        .max_by_key(|&(l, _)| l)?;
    match ast.kind(def) {
        NodeKind::Param => Some(def),
        _ => ast.parent(def),
    }
}

fn binops<'a>(ast: &'a Ast, stmt: NodeId, op: &'a str) -> impl Iterator<Item = NodeId> + 'a {
    let rhs = ast.statement_expression(stmt);
    rhs.into_iter()
        .flat_map(move |e| ast.preorder(e))
        .filter(move |&n| ast.kind(n) == NodeKind::BinOp && ast.node(n).op_text.as_deref() == Some(op))
}

fn unchecked_division(ast: &Ast, stmt: NodeId) -> bool {
    binops(ast, stmt, "/").any(|div| {
        let denom = ast.children(div)[1];
        if ast.kind(denom) != NodeKind::Identifier {
            return false;
        }
        match reaching_definition(ast, denom) {
            Some(def) if ast.kind(def) != NodeKind::Param => {
                let guarded = ast.statement_expression(def).is_some_and(|e| calls(ast, e, "assert_nonzero"));
                !guarded
            }
            _ => true,
        }
    })
}

fn loop_overflow(ast: &Ast, stmt: NodeId) -> bool {
    if ast.ancestors(stmt).any(|a| ast.kind(a) == NodeKind::If) {
        return false;
    }
    binops(ast, stmt, "+").any(|add| {
        ast.children(add).iter().any(|&operand| {
            ast.kind(operand) == NodeKind::Identifier
                && reaching_definition(ast, operand).is_some_and(|def| {
                    ast.kind(def) != NodeKind::Param && ast.ancestors(def).any(|a| ast.kind(a) == NodeKind::Loop)
                })
        })
    })
}
