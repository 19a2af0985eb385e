use unicode_normalization::UnicodeNormalization;

use super::ast::*;
use super::lexer::{tokenize, Keyword, Spanned, Tok};
use super::QueryError;

/// Parse query text. Input is NFC-normalized before lexing.
pub fn parse(text: &str) -> Result<QueryAst, QueryError> {
    let normalized: String = text.nfc().collect();
    let tokens = tokenize(&normalized)?;
    let mut parser = Parser { tokens, pos: 0 };
    let ast = parser.query()?;
    validate(&ast)?;
    Ok(ast)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> QueryError {
        let here = &self.tokens[self.pos];
        QueryError::Syntax {
            line: here.line,
            column: here.column,
            found: here.tok.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), QueryError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&Tok::Kw(kw))
    }

    fn ident(&mut self) -> Result<String, QueryError> {
        match self.peek() {
            Tok::Ident(_) => match self.bump() {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn query(&mut self) -> Result<QueryAst, QueryError> {
        let mut start = Vec::new();
        if self.eat_kw(Keyword::Start) {
            loop {
                start.push(self.start_binding()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let mut matches = Vec::new();
        if self.eat_kw(Keyword::Match) {
            loop {
                matches.push(self.pattern()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let filter = if self.eat_kw(Keyword::Where) { Some(self.or_expr()?) } else { None };
        if !self.eat_kw(Keyword::Return) {
            let mut expected = Vec::new();
            if start.is_empty() && matches.is_empty() && filter.is_none() {
                expected.push("`START`");
            }
            if matches.is_empty() && filter.is_none() {
                expected.push("`MATCH`");
            }
            if filter.is_none() {
                expected.push("`WHERE`");
            }
            expected.push("`RETURN`");
            return Err(self.error(&expected));
        }
        let distinct = self.eat_kw(Keyword::Distinct);
        let mut returns = Vec::new();
        loop {
            let variable = self.ident()?;
            let property = if self.eat(&Tok::Dot) { Some(self.ident()?) } else { None };
            returns.push(ReturnItem { variable, property });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let sort = self.sort_clause(&returns)?;
        let limit = if self.eat_kw(Keyword::Limit) {
            match self.peek().clone() {
                Tok::Int(n) if n >= 1 => {
                    self.bump();
                    Some(n as u64)
                }
                Tok::Int(_) => return Err(QueryError::InvalidLimit),
                _ => return Err(self.error(&["positive integer"])),
            }
        } else {
            None
        };
        if *self.peek() != Tok::Eof {
            let mut expected = vec!["`,`"];
            if sort.is_none() && limit.is_none() {
                expected.extend(["`SORT`", "`ORDER BY`"]);
            }
            if limit.is_none() {
                expected.push("`LIMIT`");
            }
            expected.push("end of input");
            return Err(self.error(&expected));
        }
        Ok(QueryAst { start, matches, filter, distinct, returns, sort, limit })
    }

    fn start_binding(&mut self) -> Result<StartBinding, QueryError> {
        let variable = self.ident()?;
        self.expect(Tok::Eq, "`=`")?;
        if !self.eat_kw(Keyword::Node) {
            return Err(self.error(&["`node`"]));
        }
        self.expect(Tok::Colon, "`:`")?;
        let index = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let key_field = self.ident()?;
        self.expect(Tok::Eq, "`=`")?;
        let key_value = match self.peek() {
            Tok::Str(_) => match self.bump() {
                Tok::Str(s) => s,
                _ => unreachable!(),
            },
            _ => return Err(self.error(&["string"])),
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(StartBinding { variable, index, key_field, key_value })
    }

    fn node_var(&mut self) -> Result<String, QueryError> {
        self.expect(Tok::LParen, "`(`")?;
        let v = self.ident()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(v)
    }

    fn pattern(&mut self) -> Result<PathPattern, QueryError> {
        let origin = self.node_var()?;
        let mut hops = Vec::new();
        loop {
            let leftward = match self.peek() {
                Tok::Lt if *self.peek_at(1) == Tok::Minus => {
                    self.bump();
                    self.bump();
                    true
                }
                Tok::Minus => {
                    self.bump();
                    false
                }
                _ => break,
            };
            self.expect(Tok::LBracket, "`[`")?;
            self.expect(Tok::Colon, "`:`")?;
            let label = self.ident()?;
            self.expect(Tok::RBracket, "`]`")?;
            self.expect(Tok::Minus, "`-`")?;
            let direction = if leftward {
                HopDirection::Left
            } else if self.eat(&Tok::Gt) {
                HopDirection::Right
            } else {
                HopDirection::Either
            };
            let target = self.node_var()?;
            hops.push(Hop { label, direction, target });
        }
        Ok(PathPattern { origin, hops })
    }

    fn or_expr(&mut self) -> Result<BoolExpr, QueryError> {
        let mut expr = self.and_expr()?;
        while self.eat_kw(Keyword::Or) {
            expr = expr.or(self.and_expr()?);
        }
        Ok(expr)
    }

    fn and_expr(&mut self) -> Result<BoolExpr, QueryError> {
        let mut expr = self.atom()?;
        while self.eat_kw(Keyword::And) {
            expr = expr.and(self.atom()?);
        }
        Ok(expr)
    }

    fn atom(&mut self) -> Result<BoolExpr, QueryError> {
        if self.eat(&Tok::LParen) {
            let inner = self.or_expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(inner);
        }
        let left = self.operand()?;
        let op = match self.peek() {
            Tok::Eq => CompareOp::Eq,
            Tok::Ne => CompareOp::Ne,
            Tok::Lt => CompareOp::Lt,
            Tok::Gt => CompareOp::Gt,
            Tok::Le => CompareOp::Le,
            Tok::Ge => CompareOp::Ge,
            _ => return Err(self.error(&["`=`", "`<>`", "`<`", "`>`", "`<=`", "`>=`"])),
        };
        self.bump();
        let right = self.operand()?;
        Ok(BoolExpr::Compare { left, op, right })
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        const EXPECTED: &[&str] = &["property access", "string", "number", "`true`", "`false`"];
        let negative = self.eat(&Tok::Minus);
        let lit = match self.peek().clone() {
            Tok::Int(i) => Literal::Integer(if negative { -i } else { i }),
            Tok::Real(x) => Literal::Real(if negative { -x } else { x }),
            _ if negative => return Err(self.error(&["number"])),
            Tok::Str(s) => Literal::Text(s),
            Tok::Kw(Keyword::True) => Literal::Boolean(true),
            Tok::Kw(Keyword::False) => Literal::Boolean(false),
            Tok::Ident(variable) => {
                self.bump();
                if !self.eat(&Tok::Dot) {
                    return Err(self.error(&["`.`"]));
                }
                let property = self.ident()?;
                return Ok(Operand::Property { variable, property });
            }
            _ => return Err(self.error(EXPECTED)),
        };
        self.bump();
        Ok(Operand::Literal(lit))
    }

    fn sort_clause(&mut self, returns: &[ReturnItem]) -> Result<Option<SortKey>, QueryError> {
        let qualified = if self.eat_kw(Keyword::Sort) {
            false
        } else if self.eat_kw(Keyword::Order) {
            if !self.eat_kw(Keyword::By) {
                return Err(self.error(&["`BY`"]));
            }
            true
        } else {
            return Ok(None);
        };
        // SORT applies to a property of the single variable the query returns.
        let first = self.ident()?;
        let (variable, property) = if self.eat(&Tok::Dot) {
            (Some(first), self.ident()?)
        } else if qualified {
            return Err(self.error(&["`.`"]));
        } else {
            (None, first)
        };
        let mut returned: Vec<&str> = returns.iter().map(|r| r.variable.as_str()).collect();
        returned.dedup();
        returned.sort_unstable();
        returned.dedup();
        if returned.len() != 1 {
            return Err(QueryError::AmbiguousSort);
        }
        if let Some(v) = variable {
            if v != returned[0] {
                return Err(QueryError::AmbiguousSort);
            }
        }
        let ascending = if self.eat_kw(Keyword::Desc) {
            false
        } else {
            self.eat_kw(Keyword::Asc);
            true
        };
        Ok(Some(SortKey { property, ascending }))
    }
}

/// Binding rules that the grammar alone does not enforce.
pub fn validate(ast: &QueryAst) -> Result<(), QueryError> {
    let mut seen: Vec<&str> = Vec::new();
    for b in &ast.start {
        if seen.contains(&b.variable.as_str()) {
            return Err(QueryError::DuplicateVariable(b.variable.clone()));
        }
        seen.push(&b.variable);
    }
    let bound = ast.bound_variables();
    let is_bound = |v: &str| bound.iter().any(|b| b == v);
    if let Some(filter) = &ast.filter {
        for operand in filter.operands() {
            if let Operand::Property { variable, .. } = operand {
                if !is_bound(variable) {
                    return Err(QueryError::UnboundVariable(variable.clone()));
                }
            }
        }
    }
    for item in &ast.returns {
        if !is_bound(&item.variable) {
            return Err(QueryError::UnboundVariable(item.variable.clone()));
        }
    }
    if ast.returns.is_empty() {
        return Err(QueryError::EmptyReturn);
    }
    if ast.limit == Some(0) {
        return Err(QueryError::InvalidLimit);
    }
    Ok(())
}
