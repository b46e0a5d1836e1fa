//! Recursive-descent parser producing an [`Ast`].

use super::ast::{Ast, AstNode, NodeId, NodeKind};
use super::lexer::{Token, TokenKind};
use super::{builtin_arity, FrontendError};
use std::collections::BTreeMap;

pub fn parse(tokens: &[Token]) -> Result<Ast, FrontendError> {
    let line_count = tokens.last().map_or(1, |t| t.line);
    parse_with_line_count(tokens, line_count)
}

pub(crate) fn parse_with_line_count(tokens: &[Token], line_count: usize) -> Result<Ast, FrontendError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        nodes: Vec::new(),
    };
    let root = p.module()?;
    let mut parent_of = vec![None; p.nodes.len()];
    for (i, n) in p.nodes.iter().enumerate() {
        for c in &n.children {
            parent_of[c.0] = Some(NodeId(i));
        }
    }
    let mut functions = BTreeMap::new();
    for &f in &p.nodes[root.0].children {
        let node = &p.nodes[f.0];
        let name = node.name.clone().unwrap_or_default();
        if functions.insert(name.clone(), f).is_some() {
            return Err(FrontendError::DuplicateFunction {
                name,
                line: node.line,
            });
        }
    }
    let ast = Ast {
        nodes: p.nodes,
        root,
        functions,
        parent_of,
        line_count: line_count.max(1),
    };
    check_arity(&ast)?;
    Ok(ast)
}

fn check_arity(ast: &Ast) -> Result<(), FrontendError> {
    for node in &ast.nodes {
        if node.kind != NodeKind::Call {
            continue;
        }
        let callee = ast.node(node.children[0]).name.clone().unwrap_or_default();
        let found = node.children.len() - 1;
        let expected = if let Some(n) = builtin_arity(&callee) {
            n
        } else if let Some(&f) = ast.functions.get(&callee) {
            ast.children(f)
                .iter()
                .filter(|&&c| ast.kind(c) == NodeKind::Param)
                .count()
        } else {
            continue;
        };
        if expected != found {
            return Err(FrontendError::Arity {
                callee,
                expected,
                found,
                line: node.line,
            });
        }
    }
    Ok(())
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    nodes: Vec<AstNode>,
}

/// Binding power of binary operators, loosest first.
fn binary_precedence(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "==" | "!=" => 3,
        "<" | ">" | "<=" | ">=" => 4,
        "+" | "-" => 5,
        "*" | "/" | "%" => 6,
        _ => return None,
    })
}

pub(crate) const UNARY_PRECEDENCE: u8 = 7;

pub(crate) fn precedence_of(op: &str) -> u8 {
    binary_precedence(op).unwrap_or(UNARY_PRECEDENCE)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + offset)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text && t.kind != TokenKind::Identifier)
    }

    fn error(&self, expected: &str) -> FrontendError {
        match self.peek() {
            Some(t) => FrontendError::Parse {
                expected: expected.to_string(),
                found: t.text.clone(),
                line: t.line,
                column: t.column,
            },
            None => {
                let (line, column) = self
                    .tokens
                    .last()
                    .map_or((1, 1), |t| (t.line, t.column + t.text.chars().count()));
                FrontendError::Parse {
                    expected: expected.to_string(),
                    found: "end of input".to_string(),
                    line,
                    column,
                }
            }
        }
    }

    fn expect(&mut self, text: &str) -> Result<&'a Token, FrontendError> {
        if self.at(text) {
            let t = &self.tokens[self.pos];
            self.pos += 1;
            Ok(t)
        } else {
            Err(self.error(&format!("'{text}'")))
        }
    }

    fn expect_ident(&mut self) -> Result<&'a Token, FrontendError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn push(&mut self, kind: NodeKind, line: usize, children: Vec<NodeId>) -> NodeId {
        self.nodes.push(AstNode {
            kind,
            children,
            line,
            op_text: None,
            name: None,
            literal: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn named(&mut self, kind: NodeKind, line: usize, name: &str, children: Vec<NodeId>) -> NodeId {
        let id = self.push(kind, line, children);
        self.nodes[id.0].name = Some(name.to_string());
        id
    }

    fn module(&mut self) -> Result<NodeId, FrontendError> {
        let mut funcs = Vec::new();
        while self.peek().is_some() {
            funcs.push(self.func_decl()?);
        }
        let line = self.tokens.first().map_or(1, |t| t.line);
        Ok(self.push(NodeKind::Module, line, funcs))
    }

    fn func_decl(&mut self) -> Result<NodeId, FrontendError> {
        let kw = self.expect("func")?;
        let name = self.expect_ident()?;
        self.expect("(")?;
        let mut children = Vec::new();
        if !self.at(")") {
            loop {
                let p = self.expect_ident()?;
                children.push(self.named(NodeKind::Param, p.line, &p.text, Vec::new()));
                if self.at(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(")")?;
        children.push(self.block()?);
        Ok(self.named(NodeKind::FuncDecl, kw.line, &name.text, children))
    }

    fn block(&mut self) -> Result<NodeId, FrontendError> {
        let open = self.expect("{")?;
        let mut stmts = Vec::new();
        loop {
            while self.at(";") {
                self.pos += 1;
            }
            if self.at("}") || self.peek().is_none() {
                break;
            }
            stmts.push(self.statement()?);
        }
        self.expect("}")?;
        Ok(self.push(NodeKind::Block, open.line, stmts))
    }

    fn statement(&mut self) -> Result<NodeId, FrontendError> {
        let tok = self.peek().ok_or_else(|| self.error("statement"))?;
        match (tok.kind, tok.text.as_str()) {
            (TokenKind::Keyword, "var") => {
                self.pos += 1;
                let name = self.expect_ident()?;
                let target = self.named(NodeKind::Identifier, name.line, &name.text, Vec::new());
                self.expect("=")?;
                let value = self.expression(0)?;
                Ok(self.named(NodeKind::VarDecl, tok.line, &name.text, vec![target, value]))
            }
            (TokenKind::Keyword, "if") => self.if_statement(),
            (TokenKind::Keyword, "while") => {
                self.pos += 1;
                let cond = self.expression(0)?;
                let body = self.block()?;
                Ok(self.push(NodeKind::Loop, tok.line, vec![cond, body]))
            }
            (TokenKind::Keyword, "return") => {
                self.pos += 1;
                let mut children = Vec::new();
                // the returned value, when present, starts on the same line
                if let Some(next) = self.peek() {
                    if next.line == tok.line && next.text != "}" && next.text != ";" {
                        children.push(self.expression(0)?);
                    }
                }
                Ok(self.push(NodeKind::Return, tok.line, children))
            }
            (TokenKind::Identifier, _) => {
                if self.peek_at(1).is_some_and(|t| t.text == "(") {
                    let call = self.call()?;
                    Ok(self.push(NodeKind::ExprStmt, tok.line, vec![call]))
                } else {
                    self.pos += 1;
                    let target = self.named(NodeKind::Identifier, tok.line, &tok.text, Vec::new());
                    self.expect("=")?;
                    let value = self.expression(0)?;
                    Ok(self.push(NodeKind::Assign, tok.line, vec![target, value]))
                }
            }
            _ => Err(self.error("statement")),
        }
    }

    fn if_statement(&mut self) -> Result<NodeId, FrontendError> {
        let kw = self.expect("if")?;
        let cond = self.expression(0)?;
        let then = self.block()?;
        let mut children = vec![cond, then];
        if self.at("else") {
            let else_tok = self.expect("else")?;
            if self.at("if") {
                let nested = self.if_statement()?;
                children.push(self.push(NodeKind::Block, else_tok.line, vec![nested]));
            } else {
                children.push(self.block()?);
            }
        }
        Ok(self.push(NodeKind::If, kw.line, children))
    }

    fn call(&mut self) -> Result<NodeId, FrontendError> {
        let name = self.expect_ident()?;
        let callee = self.named(NodeKind::Identifier, name.line, &name.text, Vec::new());
        self.expect("(")?;
        let mut children = vec![callee];
        if !self.at(")") {
            loop {
                children.push(self.expression(0)?);
                if self.at(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(self.push(NodeKind::Call, name.line, children))
    }

    /// Precedence climbing; `min` is the loosest binding power accepted.
    fn expression(&mut self, min: u8) -> Result<NodeId, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let Some(tok) = self.peek() else { break };
            if tok.kind != TokenKind::Operator {
                break;
            }
            let Some(prec) = binary_precedence(&tok.text) else {
                break;
            };
            if prec < min {
                break;
            }
            self.pos += 1;
            let rhs = self.expression(prec + 1)?;
            let line = self.nodes[lhs.0].line;
            let id = self.push(NodeKind::BinOp, line, vec![lhs, rhs]);
            self.nodes[id.0].op_text = Some(tok.text.clone());
            lhs = id;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<NodeId, FrontendError> {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Operator && (tok.text == "!" || tok.text == "-") {
                self.pos += 1;
                let operand = self.unary()?;
                let id = self.push(NodeKind::UnaryOp, tok.line, vec![operand]);
                self.nodes[id.0].op_text = Some(tok.text.clone());
                return Ok(id);
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<NodeId, FrontendError> {
        let tok = self.peek().ok_or_else(|| self.error("expression"))?;
        match tok.kind {
            TokenKind::IntLiteral | TokenKind::BoolLiteral => {
                self.pos += 1;
                let kind = if tok.kind == TokenKind::IntLiteral {
                    NodeKind::IntLit
                } else {
                    NodeKind::BoolLit
                };
                let id = self.push(kind, tok.line, Vec::new());
                self.nodes[id.0].literal = Some(tok.text.clone());
                Ok(id)
            }
            TokenKind::Identifier => {
                if self.peek_at(1).is_some_and(|t| t.text == "(") {
                    self.call()
                } else {
                    self.pos += 1;
                    Ok(self.named(NodeKind::Identifier, tok.line, &tok.text, Vec::new()))
                }
            }
            TokenKind::Punct if tok.text == "(" => {
                self.pos += 1;
                let inner = self.expression(0)?;
                self.expect(")")?;
                Ok(inner)
            }
            _ => Err(self.error("expression")),
        }
    }
}
