//! Token classification, end-point resolution, and AST path extraction.
//!
//! For every token on the right-hand side of a line this module answers two
//! questions: where was the token most recently defined (its end-point), and
//! what does the syntax tree look like between the use and that definition
//! (its context path). Operators and built-in calls have neither; they are
//! encoded directly through a one-hot vocabulary.

mod path;
mod tokens;
mod vocab;

pub use path::{extract_ast_path, path_between, AstPath, Direction, PathStep};
pub use tokens::{classify_token, line_tokens, rhs_tokens, TokenClass, TokenOccurrence};
pub use vocab::{build_vocabs, encode_path, encode_path_capped, EncodedPath, Vocab, MAX_NODE_KIND_VOCAB};

use crate::frontend::{Ast, FrontendError, NodeId, NodeKind};
use thiserror::Error;

pub const MAX_TOKENS_PER_LINE: usize = 16;
pub const MAX_PATH_LEN: usize = 32;

/// Line of the most recent definition, or `None` when there is none.
pub type EndPoint = Option<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DependenceError {
    #[error("line {line} has no assignment")]
    NotAnAssignment { line: usize },
    #[error("call to unknown function `{name}` on line {line}")]
    UnknownCallee { name: String, line: usize },
    #[error(transparent)]
    Frontend(#[from] FrontendError),
}

/// How end-points are chosen for variables and user-function calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub enum EndpointMode {
    /// Most recent textual definition (return line for user functions).
    #[default]
    MostRecentDefinition,
    /// Always the preceding line.
    PreviousLine,
}

/// What a token contributes besides its end-point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathOrOneHot {
    /// Operators and built-ins, keyed by their text.
    OneHot { text: String, class: TokenClass },
    Path(AstPath),
    /// No previous definition exists.
    Empty,
}

/// Most recent definition of a variable before `line`, or the return line of
/// a user function.
pub fn resolve_endpoint(occ: &TokenOccurrence, line: usize, ast: &Ast) -> EndPoint {
    match occ.class {
        TokenClass::Variable => {
            let func = ast.enclosing_function(occ.node)?;
            definitions_in(ast, func, &occ.text)
                .map(|(l, _)| l)
                .filter(|&l| l < line)
                .max()
        }
        TokenClass::UserFunc => last_return(ast, &occ.text).map(|r| ast.node(r).line),
        TokenClass::Operator | TokenClass::BuiltinFunc => None,
    }
}

/// Definition sites of `name` inside `func`: parameters and assignment or
/// declaration targets, as (line, defining node).
pub(crate) fn definitions_in<'a>(
    ast: &'a Ast,
    func: NodeId,
    name: &'a str,
) -> impl Iterator<Item = (usize, NodeId)> + 'a {
    ast.preorder(func).into_iter().filter_map(move |n| {
        let node = ast.node(n);
        match node.kind {
            NodeKind::Param if node.name.as_deref() == Some(name) => Some((node.line, n)),
            NodeKind::Assign | NodeKind::VarDecl => {
                let target = node.children[0];
                (ast.node(target).name.as_deref() == Some(name)).then_some((node.line, target))
            }
            _ => None,
        }
    })
}

/// Textually last `Return` statement of a function.
pub(crate) fn last_return(ast: &Ast, func_name: &str) -> Option<NodeId> {
    let &func = ast.functions.get(func_name)?;
    ast.preorder(func)
        .into_iter()
        .filter(|&n| ast.kind(n) == NodeKind::Return)
        .max_by_key(|&n| ast.node(n).line)
}

/// The node a resolved end-point refers to: the defining identifier or
/// parameter for variables, the return statement for user functions.
pub fn defining_node(occ: &TokenOccurrence, ep: usize, ast: &Ast) -> Option<NodeId> {
    match occ.class {
        TokenClass::Variable => {
            let func = ast.enclosing_function(occ.node)?;
            definitions_in(ast, func, &occ.text)
                .filter(|&(l, _)| l == ep)
                .map(|(_, n)| n)
                .last()
        }
        TokenClass::UserFunc => last_return(ast, &occ.text).filter(|&r| ast.node(r).line == ep),
        _ => None,
    }
}

/// First node, in pre-order, anchored at `line`.
pub(crate) fn first_node_on_line(ast: &Ast, line: usize) -> Option<NodeId> {
    ast.preorder(ast.root)
        .into_iter()
        .find(|&n| n != ast.root && ast.node(n).line == line)
}

/// End-point and path (or one-hot) for a token on `line`.
pub fn get_path(
    occ: &TokenOccurrence,
    line: usize,
    ast: &Ast,
) -> Result<(EndPoint, PathOrOneHot), DependenceError> {
    get_path_with_mode(occ, line, ast, EndpointMode::MostRecentDefinition)
}

pub fn get_path_with_mode(
    occ: &TokenOccurrence,
    line: usize,
    ast: &Ast,
    mode: EndpointMode,
) -> Result<(EndPoint, PathOrOneHot), DependenceError> {
    let class = classify_token(occ, ast)?;
    match class {
        TokenClass::Operator | TokenClass::BuiltinFunc => Ok((
            None,
            PathOrOneHot::OneHot {
                text: occ.text.clone(),
                class,
            },
        )),
        TokenClass::Variable | TokenClass::UserFunc => match mode {
            EndpointMode::MostRecentDefinition => match resolve_endpoint(occ, line, ast) {
                None => Ok((None, PathOrOneHot::Empty)),
                Some(ep) => {
                    let path = extract_ast_path(occ, ep, ast);
                    Ok((Some(ep), path.map_or(PathOrOneHot::Empty, PathOrOneHot::Path)))
                }
            },
            EndpointMode::PreviousLine => {
                if line <= 1 {
                    return Ok((None, PathOrOneHot::Empty));
                }
                let ep = line - 1;
                let path = first_node_on_line(ast, ep).map(|target| path_between(ast, occ.node, target));
                Ok((Some(ep), path.map_or(PathOrOneHot::Empty, PathOrOneHot::Path)))
            }
        },
    }
}

#[cfg(test)]
mod tests;
