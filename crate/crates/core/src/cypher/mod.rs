//! Read-only Cypher subset: `START`, `MATCH`, `WHERE`, `RETURN [DISTINCT]`,
//! `SORT`/`ORDER BY` and `LIMIT`.
//!
//! ```text
//! query   := start? match? where? return sort? limit?
//! start   := START var = node:Index(field="value") (, ...)*
//! match   := MATCH pattern (, pattern)*
//! pattern := (var) ( -[:label]-> (var) | <-[:label]- (var) | -[:label]- (var) )*
//! where   := WHERE expr        expr := expr OR expr | expr AND expr | (expr) | operand op operand
//! return  := RETURN DISTINCT? var[.prop] (, var[.prop])*
//! sort    := SORT prop (ASC|DESC)? | ORDER BY var.prop (ASC|DESC)?
//! limit   := LIMIT positive-integer
//! ```

mod ast;
mod lexer;
mod parser;
mod render;

use thiserror::Error;

pub use ast::*;
pub use lexer::{is_ident_continue, is_ident_start, is_keyword};
pub use parser::{parse, validate};
pub use render::{quote, render};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("syntax error at {line}:{column}: found {found}, expected one of [{}]", expected.join(", "))]
    Syntax { line: usize, column: usize, found: String, expected: Vec<String> },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("variable `{0}` bound twice in START")]
    DuplicateVariable(String),
    #[error("LIMIT must be a positive integer")]
    InvalidLimit,
    #[error("RETURN must list at least one item")]
    EmptyReturn,
    #[error("SORT needs exactly one returned variable to scope its property")]
    AmbiguousSort,
}

/// `render(parse(text))`, used wherever two query texts are compared.
pub fn canonicalize(text: &str) -> Result<String, QueryError> {
    parse(text).map(|ast| render(&ast))
}

/// True for strings usable as a bare identifier in query text.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_continue) && !is_keyword(s)
}
