//! Generator-side program representation and its canonical emitter.
//!
//! The emitter produces exactly the text the pretty-printer would, and
//! records the line of every statement it writes, so labels and statement
//! records never depend on re-parsing.

use super::{LabeledLine, StatementRecord, VulnClass};
use crate::frontend::parser::{precedence_of, UNARY_PRECEDENCE};
use crate::frontend::NodeKind;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Expr {
    Var(String),
    Int(i64),
    Bin(&'static str, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub(crate) fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub(crate) fn bin(op: &'static str, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    pub(crate) fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.to_string(), args)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, ..) => precedence_of(op),
            Expr::Neg(_) => UNARY_PRECEDENCE,
            _ => u8::MAX,
        }
    }

    pub(crate) fn contains_call(&self, name: &str) -> bool {
        match self {
            Expr::Call(n, args) => n == name || args.iter().any(|a| a.contains_call(name)),
            Expr::Bin(_, l, r) => l.contains_call(name) || r.contains_call(name),
            Expr::Neg(x) => x.contains_call(name),
            _ => false,
        }
    }

    pub(crate) fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        match self {
            Expr::Var(n) => out.push_str(n),
            Expr::Int(v) => out.push_str(&v.to_string()),
            Expr::Call(n, args) => {
                out.push_str(n);
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    a.write(out);
                }
                out.push(')');
            }
            Expr::Neg(x) => {
                out.push('-');
                x.write_operand(x.precedence() < UNARY_PRECEDENCE, out);
            }
            Expr::Bin(op, l, r) => {
                let prec = precedence_of(op);
                l.write_operand(l.precedence() < prec, out);
                out.push(' ');
                out.push_str(op);
                out.push(' ');
                r.write_operand(r.precedence() <= prec, out);
            }
        }
    }

    fn write_operand(&self, parens: bool, out: &mut String) {
        if parens {
            out.push('(');
        }
        self.write(out);
        if parens {
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Stmt {
    Def {
        decl: bool,
        target: String,
        value: Expr,
        vuln: Option<VulnClass>,
    },
    If {
        cond: Expr,
        then: Vec<Stmt>,
        els: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return(Expr),
}

impl Stmt {
    /// Lines this statement occupies when emitted.
    pub(crate) fn line_count(&self) -> usize {
        match self {
            Stmt::Def { .. } | Stmt::Return(_) => 1,
            Stmt::If { then, els, .. } => {
                2 + lines_of(then) + els.as_ref().map_or(0, |e| 1 + lines_of(e))
            }
            Stmt::While { body, .. } => 2 + lines_of(body),
        }
    }
}

pub(crate) fn lines_of(stmts: &[Stmt]) -> usize {
    stmts.iter().map(Stmt::line_count).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Func {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

pub(crate) struct Emitted {
    pub source: String,
    pub labels: Vec<LabeledLine>,
    pub statements: Vec<StatementRecord>,
}

struct Emitter {
    out: String,
    line: usize,
    func: String,
    labels: Vec<LabeledLine>,
    statements: Vec<StatementRecord>,
}

pub(crate) fn emit(funcs: &[Func]) -> Emitted {
    let mut e = Emitter {
        out: String::new(),
        line: 1,
        func: String::new(),
        labels: Vec::new(),
        statements: Vec::new(),
    };
    for (i, f) in funcs.iter().enumerate() {
        if i > 0 {
            e.push_line(0, "");
        }
        e.func = f.name.clone();
        e.record(NodeKind::FuncDecl, f.params.clone());
        e.push_line(0, &format!("func {}({}) {{", f.name, f.params.join(", ")));
        e.block(&f.body, 1);
        e.push_line(0, "}");
    }
    Emitted {
        source: e.out,
        labels: e.labels,
        statements: e.statements,
    }
}

impl Emitter {
    fn push_line(&mut self, depth: usize, text: &str) {
        if !text.is_empty() {
            for _ in 0..depth {
                self.out.push_str("    ");
            }
        }
        self.out.push_str(text);
        self.out.push('\n');
        self.line += 1;
    }

    fn record(&mut self, kind: NodeKind, writes: Vec<String>) {
        self.statements.push(StatementRecord {
            line: self.line,
            function: self.func.clone(),
            kind,
            writes,
        });
    }

    fn block(&mut self, stmts: &[Stmt], depth: usize) {
        for s in stmts {
            self.stmt(s, depth);
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        match s {
            Stmt::Def {
                decl,
                target,
                value,
                vuln,
            } => {
                let kind = if *decl { NodeKind::VarDecl } else { NodeKind::Assign };
                self.record(kind, vec![target.clone()]);
                self.labels.push(LabeledLine::new(self.line, *vuln));
                let kw = if *decl { "var " } else { "" };
                self.push_line(depth, &format!("{kw}{target} = {}", value.render()));
            }
            Stmt::Return(v) => {
                self.record(NodeKind::Return, Vec::new());
                self.push_line(depth, &format!("return {}", v.render()));
            }
            Stmt::If { cond, then, els } => {
                self.record(NodeKind::If, Vec::new());
                self.push_line(depth, &format!("if {} {{", cond.render()));
                self.block(then, depth + 1);
                if let Some(els) = els {
                    self.push_line(depth, "} else {");
                    self.block(els, depth + 1);
                }
                self.push_line(depth, "}");
            }
            Stmt::While { cond, body } => {
                self.record(NodeKind::Loop, Vec::new());
                self.push_line(depth, &format!("while {} {{", cond.render()));
                self.block(body, depth + 1);
                self.push_line(depth, "}");
            }
        }
    }
}
