use std::fmt;

use super::QueryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Start,
    Match,
    Where,
    Return,
    Distinct,
    Sort,
    Order,
    By,
    Limit,
    And,
    Or,
    Asc,
    Desc,
    Node,
    True,
    False,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        Some(match word.to_ascii_uppercase().as_str() {
            "START" => Keyword::Start,
            "MATCH" => Keyword::Match,
            "WHERE" => Keyword::Where,
            "RETURN" => Keyword::Return,
            "DISTINCT" => Keyword::Distinct,
            "SORT" => Keyword::Sort,
            "ORDER" => Keyword::Order,
            "BY" => Keyword::By,
            "LIMIT" => Keyword::Limit,
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "ASC" => Keyword::Asc,
            "DESC" => Keyword::Desc,
            "NODE" => Keyword::Node,
            "TRUE" => Keyword::True,
            "FALSE" => Keyword::False,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Start => "START",
            Keyword::Match => "MATCH",
            Keyword::Where => "WHERE",
            Keyword::Return => "RETURN",
            Keyword::Distinct => "DISTINCT",
            Keyword::Sort => "SORT",
            Keyword::Order => "ORDER",
            Keyword::By => "BY",
            Keyword::Limit => "LIMIT",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Asc => "ASC",
            Keyword::Desc => "DESC",
            Keyword::Node => "node",
            Keyword::True => "true",
            Keyword::False => "false",
        }
    }
}

/// True if `word` would lex as a keyword rather than an identifier.
pub fn is_keyword(word: &str) -> bool {
    Keyword::from_word(word).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Kw(Keyword),
    Str(String),
    Int(i64),
    Real(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Dot,
    Minus,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Kw(k) => write!(f, "`{}`", k.as_str()),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Real(x) => write!(f, "number {x}"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ne => f.write_str("`<>`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || ('\u{0300}'..='\u{036F}').contains(&c)
}

pub fn tokenize(input: &str) -> Result<Vec<Spanned>, QueryError> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let error = |line, column, found: String, expected: &[&str]| QueryError::Syntax {
        line,
        column,
        found,
        expected: expected.iter().map(|s| s.to_string()).collect(),
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (start_line, start_col) = (line, col);
        let mut push = |tok: Tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok, line: start_line, column: start_col });
            *i += width;
            *col += width;
        };
        let next = chars.get(i + 1).copied();
        match c {
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            '<' if next == Some('>') => push(Tok::Ne, 2, &mut i, &mut col),
            '<' if next == Some('=') => push(Tok::Le, 2, &mut i, &mut col),
            '<' => push(Tok::Lt, 1, &mut i, &mut col),
            '>' if next == Some('=') => push(Tok::Ge, 2, &mut i, &mut col),
            '>' => push(Tok::Gt, 1, &mut i, &mut col),
            '"' => {
                let mut text = String::new();
                let mut j = i + 1;
                let mut width = 1;
                loop {
                    match chars.get(j) {
                        None => {
                            return Err(error(start_line, start_col, "unterminated string".into(), &["`\"`"]))
                        }
                        Some('"') => {
                            width += 1;
                            break;
                        }
                        Some('\\') => match chars.get(j + 1) {
                            Some(&e @ ('"' | '\\')) => {
                                text.push(e);
                                j += 2;
                                width += 2;
                            }
                            other => {
                                let found = other.map(|c| format!("escape `\\{c}`")).unwrap_or_else(|| "end of input".into());
                                return Err(error(line, col + width, found, &["`\\\"`", "`\\\\`"]));
                            }
                        },
                        Some('\n') => {
                            return Err(error(start_line, start_col, "newline in string".into(), &["`\"`"]))
                        }
                        Some(&ch) => {
                            text.push(ch);
                            j += 1;
                            width += 1;
                        }
                    }
                }
                push(Tok::Str(text), width, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while chars.get(j).is_some_and(|c| c.is_ascii_digit()) {
                    j += 1;
                }
                let mut real = false;
                if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|c| c.is_ascii_digit()) {
                    real = true;
                    j += 1;
                    while chars.get(j).is_some_and(|c| c.is_ascii_digit()) {
                        j += 1;
                    }
                }
                if matches!(chars.get(j), Some('e' | 'E')) {
                    let mut k = j + 1;
                    if matches!(chars.get(k), Some('+' | '-')) {
                        k += 1;
                    }
                    if chars.get(k).is_some_and(|c| c.is_ascii_digit()) {
                        real = true;
                        j = k;
                        while chars.get(j).is_some_and(|c| c.is_ascii_digit()) {
                            j += 1;
                        }
                    }
                }
                if chars.get(j).is_some_and(|&c| is_ident_continue(c)) {
                    return Err(error(line, col + (j - i), format!("`{}`", chars[j]), &["number"]));
                }
                let text: String = chars[i..j].iter().collect();
                let tok = if real {
                    text.parse().map(Tok::Real).ok()
                } else {
                    text.parse().map(Tok::Int).ok()
                };
                let tok = tok.ok_or_else(|| error(start_line, start_col, format!("number `{text}`"), &["number in range"]))?;
                push(tok, j - i, &mut i, &mut col);
            }
            c if is_ident_start(c) => {
                let mut j = i;
                while chars.get(j).is_some_and(|&c| is_ident_continue(c)) {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = match Keyword::from_word(&word) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Ident(word),
                };
                push(tok, j - i, &mut i, &mut col);
            }
            other => {
                return Err(error(line, col, format!("`{other}`"), &["token"]));
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}
