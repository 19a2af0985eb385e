use std::fmt::Write;

use super::ast::*;

/// Canonical text: uppercase keywords, single spaces, clauses in
/// START MATCH WHERE RETURN SORT LIMIT order, absent clauses omitted.
pub fn render(ast: &QueryAst) -> String {
    let mut out = String::new();
    if !ast.start.is_empty() {
        out.push_str("START ");
        let bindings: Vec<String> = ast
            .start
            .iter()
            .map(|b| {
                format!(
                    "{} = node:{}({}={})",
                    b.variable,
                    b.index,
                    b.key_field,
                    quote(&b.key_value)
                )
            })
            .collect();
        out.push_str(&bindings.join(", "));
        out.push(' ');
    }
    if !ast.matches.is_empty() {
        out.push_str("MATCH ");
        let patterns: Vec<String> = ast.matches.iter().map(render_pattern).collect();
        out.push_str(&patterns.join(", "));
        out.push(' ');
    }
    if let Some(filter) = &ast.filter {
        out.push_str("WHERE ");
        render_expr(filter, &mut out);
        out.push(' ');
    }
    out.push_str("RETURN ");
    if ast.distinct {
        out.push_str("DISTINCT ");
    }
    let items: Vec<String> = ast.returns.iter().map(ReturnItem::column_name).collect();
    out.push_str(&items.join(", "));
    if let Some(sort) = &ast.sort {
        let _ = write!(out, " SORT {}", sort.property);
        if !sort.ascending {
            out.push_str(" DESC");
        }
    }
    if let Some(limit) = ast.limit {
        let _ = write!(out, " LIMIT {limit}");
    }
    out
}

fn render_pattern(p: &PathPattern) -> String {
    let mut s = format!("({})", p.origin);
    for hop in &p.hops {
        let _ = match hop.direction {
            HopDirection::Right => write!(s, "-[:{}]->({})", hop.label, hop.target),
            HopDirection::Left => write!(s, "<-[:{}]-({})", hop.label, hop.target),
            HopDirection::Either => write!(s, "-[:{}]-({})", hop.label, hop.target),
        };
    }
    s
}

pub fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('"');
    q
}

fn render_literal(lit: &Literal, out: &mut String) {
    match lit {
        Literal::Text(s) => out.push_str(&quote(s)),
        Literal::Integer(i) => {
            let _ = write!(out, "{i}");
        }
        // Debug formatting of f64 always round-trips and keeps a `.` or exponent.
        Literal::Real(x) => {
            let _ = write!(out, "{x:?}");
        }
        Literal::Boolean(b) => {
            let _ = write!(out, "{b}");
        }
    }
}

fn render_operand(op: &Operand, out: &mut String) {
    match op {
        Operand::Property { variable, property } => {
            let _ = write!(out, "{variable}.{property}");
        }
        Operand::Literal(lit) => render_literal(lit, out),
    }
}

fn render_expr(expr: &BoolExpr, out: &mut String) {
    match expr {
        BoolExpr::Compare { left, op, right } => {
            render_operand(left, out);
            let _ = write!(out, " {} ", op.symbol());
            render_operand(right, out);
        }
        // Both connectives parse left-associatively, so a right operand of the
        // same or looser binding needs parentheses.
        BoolExpr::And(l, r) => {
            render_grouped(l, matches!(**l, BoolExpr::Or(..)), out);
            out.push_str(" AND ");
            render_grouped(r, !matches!(**r, BoolExpr::Compare { .. }), out);
        }
        BoolExpr::Or(l, r) => {
            render_expr(l, out);
            out.push_str(" OR ");
            render_grouped(r, matches!(**r, BoolExpr::Or(..)), out);
        }
    }
}

fn render_grouped(expr: &BoolExpr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        render_expr(expr, out);
        out.push(')');
    } else {
        render_expr(expr, out);
    }
}
