//! MiniSol frontend: lexing, parsing, and canonical printing.
//!
//! MiniSol is a small imperative language with functions, `var`
//! declarations, assignments, `if`/`else`, `while`, `return`, and calls.
//! One statement per line; every statement node is anchored at the line of
//! its first token.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{Ast, AstNode, NodeId, NodeKind};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use printer::pretty_print;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Library functions treated like operators: encoded directly, never traversed.
pub const BUILTINS: [&str; 5] = ["assert_nonzero", "ext_call", "hash", "min", "max"];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

pub(crate) fn builtin_arity(name: &str) -> Option<usize> {
    match name {
        "assert_nonzero" | "ext_call" | "hash" => Some(1),
        "min" | "max" => Some(2),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("lex error at {line}:{column}: unexpected character {found:?}")]
    Lex { line: usize, column: usize, found: char },
    #[error("parse error at {line}:{column}: expected {expected}, found {found}")]
    Parse {
        expected: String,
        found: String,
        line: usize,
        column: usize,
    },
    #[error("function `{name}` declared twice (line {line})")]
    DuplicateFunction { name: String, line: usize },
    #[error("call to `{callee}` on line {line} passes {found} arguments, expected {expected}")]
    Arity {
        callee: String,
        expected: usize,
        found: usize,
        line: usize,
    },
    #[error("more than one assignment starts on line {line}")]
    MultipleStatements { line: usize },
    #[error("line {line} is outside the program (1..={count})")]
    LineOutOfRange { line: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub id: String,
    pub source: String,
    /// 1-indexed in use: `lines[0]` is line 1.
    pub lines: Vec<String>,
}

impl SourceProgram {
    pub fn new(id: impl Into<String>, source: impl Into<String>) -> Self {
        let source = source.into();
        let lines = source.split('\n').map(str::to_string).collect();
        SourceProgram {
            id: id.into(),
            source,
            lines,
        }
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn parse(&self) -> Result<Ast, FrontendError> {
        parse_source(&self.source)
    }
}

/// Tokenize and parse, taking the line count from the source text.
pub fn parse_source(source: &str) -> Result<Ast, FrontendError> {
    let tokens = tokenize(source)?;
    parser::parse_with_line_count(&tokens, source.lines().count())
}

/// The assignment or declaration statement whose first token is on `line`.
pub fn assignments_on_line(ast: &Ast, line: usize) -> Result<Option<NodeId>, FrontendError> {
    if line == 0 || line > ast.line_count {
        return Err(FrontendError::LineOutOfRange {
            line,
            count: ast.line_count,
        });
    }
    let mut found = None;
    for (i, n) in ast.nodes.iter().enumerate() {
        if n.line == line && matches!(n.kind, NodeKind::Assign | NodeKind::VarDecl) {
            if found.is_some() {
                return Err(FrontendError::MultipleStatements { line });
            }
            found = Some(NodeId(i));
        }
    }
    Ok(found)
}
