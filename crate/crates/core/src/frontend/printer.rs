//! Canonical MiniSol pretty-printer: one statement per line, four-space
//! indentation, a blank line between functions.

use super::ast::{Ast, NodeId, NodeKind};
use super::parser::{precedence_of, UNARY_PRECEDENCE};

pub fn pretty_print(ast: &Ast) -> String {
    let mut out = String::new();
    for (i, &f) in ast.children(ast.root).iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(ast, f, &mut out);
    }
    out
}

fn print_function(ast: &Ast, f: NodeId, out: &mut String) {
    let node = ast.node(f);
    let params: Vec<&str> = node
        .children
        .iter()
        .filter(|&&c| ast.kind(c) == NodeKind::Param)
        .map(|&c| ast.node(c).name.as_deref().unwrap_or(""))
        .collect();
    out.push_str(&format!(
        "func {}({}) {{\n",
        node.name.as_deref().unwrap_or(""),
        params.join(", ")
    ));
    let body = *node.children.last().expect("function body");
    print_block_body(ast, body, 1, out);
    out.push_str("}\n");
}

fn print_block_body(ast: &Ast, block: NodeId, depth: usize, out: &mut String) {
    for &s in ast.children(block) {
        print_statement(ast, s, depth, out);
    }
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_statement(ast: &Ast, s: NodeId, depth: usize, out: &mut String) {
    let node = ast.node(s);
    indent(depth, out);
    match node.kind {
        NodeKind::VarDecl => {
            out.push_str(&format!(
                "var {} = {}\n",
                node.name.as_deref().unwrap_or(""),
                expr_to_string(ast, node.children[1])
            ));
        }
        NodeKind::Assign => {
            out.push_str(&format!(
                "{} = {}\n",
                expr_to_string(ast, node.children[0]),
                expr_to_string(ast, node.children[1])
            ));
        }
        NodeKind::Return => match node.children.first() {
            Some(&e) => out.push_str(&format!("return {}\n", expr_to_string(ast, e))),
            None => out.push_str("return\n"),
        },
        NodeKind::ExprStmt => {
            out.push_str(&expr_to_string(ast, node.children[0]));
            out.push('\n');
        }
        NodeKind::Loop => {
            out.push_str(&format!("while {} {{\n", expr_to_string(ast, node.children[0])));
            print_block_body(ast, node.children[1], depth + 1, out);
            indent(depth, out);
            out.push_str("}\n");
        }
        NodeKind::If => {
            out.push_str(&format!("if {} {{\n", expr_to_string(ast, node.children[0])));
            print_block_body(ast, node.children[1], depth + 1, out);
            indent(depth, out);
            if let Some(&els) = node.children.get(2) {
                out.push_str("} else {\n");
                print_block_body(ast, els, depth + 1, out);
                indent(depth, out);
            }
            out.push_str("}\n");
        }
        other => unreachable!("{other} is not a statement"),
    }
}

pub fn expr_to_string(ast: &Ast, e: NodeId) -> String {
    let mut out = String::new();
    write_expr(ast, e, &mut out);
    out
}

fn expr_precedence(ast: &Ast, e: NodeId) -> u8 {
    let node = ast.node(e);
    match node.kind {
        NodeKind::BinOp => precedence_of(node.op_text.as_deref().unwrap_or("")),
        NodeKind::UnaryOp => UNARY_PRECEDENCE,
        _ => u8::MAX,
    }
}

fn write_expr(ast: &Ast, e: NodeId, out: &mut String) {
    let node = ast.node(e);
    match node.kind {
        NodeKind::Identifier => out.push_str(node.name.as_deref().unwrap_or("")),
        NodeKind::IntLit | NodeKind::BoolLit => out.push_str(node.literal.as_deref().unwrap_or("")),
        NodeKind::Call => {
            write_expr(ast, node.children[0], out);
            out.push('(');
            for (i, &a) in node.children[1..].iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(ast, a, out);
            }
            out.push(')');
        }
        NodeKind::UnaryOp => {
            out.push_str(node.op_text.as_deref().unwrap_or(""));
            let operand = node.children[0];
            write_operand(ast, operand, expr_precedence(ast, operand) < UNARY_PRECEDENCE, out);
        }
        NodeKind::BinOp => {
            let prec = expr_precedence(ast, e);
            let (lhs, rhs) = (node.children[0], node.children[1]);
            write_operand(ast, lhs, expr_precedence(ast, lhs) < prec, out);
            out.push(' ');
            out.push_str(node.op_text.as_deref().unwrap_or(""));
            out.push(' ');
            // operators are left-associative, so an equal-precedence right child needs parens
            write_operand(ast, rhs, expr_precedence(ast, rhs) <= prec, out);
        }
        other => unreachable!("{other} is not an expression"),
    }
}

fn write_operand(ast: &Ast, e: NodeId, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
    }
    write_expr(ast, e, out);
    if parens {
        out.push(')');
    }
}
