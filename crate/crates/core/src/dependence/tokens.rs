use super::{DependenceError, MAX_TOKENS_PER_LINE};
use crate::frontend::{assignments_on_line, is_builtin, Ast, NodeId, NodeKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenClass {
    Operator,
    BuiltinFunc,
    UserFunc,
    Variable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenOccurrence {
    pub text: String,
    pub class: TokenClass,
    /// Identifier for variables and user functions, BinOp/UnaryOp for
    /// operators, Call for built-ins.
    pub node: NodeId,
    pub line: usize,
}

/// Right-hand-side tokens of the assignment on `line`, left to right, at
/// most 16.
pub fn rhs_tokens(ast: &Ast, line: usize) -> Result<Vec<TokenOccurrence>, DependenceError> {
    let stmt = assignments_on_line(ast, line)?.ok_or(DependenceError::NotAnAssignment { line })?;
    let mut out = Vec::new();
    collect(ast, ast.children(stmt)[1], line, &mut out)?;
    out.truncate(MAX_TOKENS_PER_LINE);
    Ok(out)
}

/// Tokens of whatever value expression is anchored on `line`: assignment
/// right-hand side, returned value, called expression, or branch/loop
/// condition. Lines without one (function headers, closing braces) yield
/// no tokens.
pub fn line_tokens(ast: &Ast, line: usize, cap: usize) -> Result<Vec<TokenOccurrence>, DependenceError> {
    let stmt = ast
        .preorder(ast.root)
        .into_iter()
        .find(|&n| ast.node(n).line == line && ast.kind(n).is_statement());
    let mut out = Vec::new();
    if let Some(expr) = stmt.and_then(|s| ast.statement_expression(s)) {
        collect(ast, expr, line, &mut out)?;
    }
    out.truncate(cap);
    Ok(out)
}

fn collect(
    ast: &Ast,
    expr: NodeId,
    line: usize,
    out: &mut Vec<TokenOccurrence>,
) -> Result<(), DependenceError> {
    let node = ast.node(expr);
    let occ = |text: &str, class, node| TokenOccurrence {
        text: text.to_string(),
        class,
        node,
        line,
    };
    match node.kind {
        NodeKind::BinOp => {
            collect(ast, node.children[0], line, out)?;
            out.push(occ(node.op_text.as_deref().unwrap_or(""), TokenClass::Operator, expr));
            collect(ast, node.children[1], line, out)?;
        }
        NodeKind::UnaryOp => {
            out.push(occ(node.op_text.as_deref().unwrap_or(""), TokenClass::Operator, expr));
            collect(ast, node.children[0], line, out)?;
        }
        NodeKind::Call => {
            let callee = node.children[0];
            let name = ast.node(callee).name.as_deref().unwrap_or("");
            if is_builtin(name) {
                out.push(occ(name, TokenClass::BuiltinFunc, expr));
            } else if ast.functions.contains_key(name) {
                out.push(occ(name, TokenClass::UserFunc, callee));
            } else {
                return Err(DependenceError::UnknownCallee {
                    name: name.to_string(),
                    line: node.line,
                });
            }
            for &arg in &node.children[1..] {
                collect(ast, arg, line, out)?;
            }
        }
        NodeKind::Identifier => {
            out.push(occ(node.name.as_deref().unwrap_or(""), TokenClass::Variable, expr));
        }
        _ => {}
    }
    Ok(())
}

/// Class of an extracted token, derived from its node alone.
pub fn classify_token(occ: &TokenOccurrence, ast: &Ast) -> Result<TokenClass, DependenceError> {
    let node = ast.node(occ.node);
    let call_class = |name: &str, line| {
        if is_builtin(name) {
            Ok(TokenClass::BuiltinFunc)
        } else if ast.functions.contains_key(name) {
            Ok(TokenClass::UserFunc)
        } else {
            Err(DependenceError::UnknownCallee {
                name: name.to_string(),
                line,
            })
        }
    };
    match node.kind {
        NodeKind::BinOp | NodeKind::UnaryOp => Ok(TokenClass::Operator),
        NodeKind::Call => {
            let callee = ast.node(node.children[0]).name.as_deref().unwrap_or("");
            call_class(callee, node.line)
        }
        NodeKind::Identifier => {
            let is_callee = ast
                .parent(occ.node)
                .is_some_and(|p| ast.kind(p) == NodeKind::Call && ast.children(p)[0] == occ.node);
            if is_callee {
                call_class(node.name.as_deref().unwrap_or(""), node.line)
            } else {
                Ok(TokenClass::Variable)
            }
        }
        _ => Ok(TokenClass::Variable),
    }
}
