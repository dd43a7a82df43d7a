//! Hand-rolled lexer for the Cypher subset. Keywords are recognized case
//! insensitively; identifiers, labels and relationship types keep their case.

use super::diag::{Diagnostic, ErrorClass, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Match,
    Optional,
    Where,
    With,
    Return,
    Distinct,
    Order,
    By,
    Limit,
    As,
    And,
    Or,
    Not,
    Asc,
    Desc,
    True,
    False,
    Null,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        let kw = match word.to_ascii_uppercase().as_str() {
            "MATCH" => Keyword::Match,
            "OPTIONAL" => Keyword::Optional,
            "WHERE" => Keyword::Where,
            "WITH" => Keyword::With,
            "RETURN" => Keyword::Return,
            "DISTINCT" => Keyword::Distinct,
            "ORDER" => Keyword::Order,
            "BY" => Keyword::By,
            "LIMIT" => Keyword::Limit,
            "AS" => Keyword::As,
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "NOT" => Keyword::Not,
            "ASC" => Keyword::Asc,
            "DESC" => Keyword::Desc,
            "TRUE" => Keyword::True,
            "FALSE" => Keyword::False,
            "NULL" => Keyword::Null,
            _ => return None,
        };
        Some(kw)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Match => "MATCH",
            Keyword::Optional => "OPTIONAL",
            Keyword::Where => "WHERE",
            Keyword::With => "WITH",
            Keyword::Return => "RETURN",
            Keyword::Distinct => "DISTINCT",
            Keyword::Order => "ORDER",
            Keyword::By => "BY",
            Keyword::Limit => "LIMIT",
            Keyword::As => "AS",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
            Keyword::Asc => "ASC",
            Keyword::Desc => "DESC",
            Keyword::True => "TRUE",
            Keyword::False => "FALSE",
            Keyword::Null => "NULL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    DotDot,
    Semicolon,
    Star,
    Minus,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl TokenKind {
    /// Short rendering for "expected X, found Y" messages.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(kw) => format!("keyword {}", kw.as_str()),
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Int(v) => format!("integer {v}"),
            TokenKind::Float(v) => format!("number {v}"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::LBracket => "`[`".to_string(),
            TokenKind::RBracket => "`]`".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::Colon => "`:`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Dot => "`.`".to_string(),
            TokenKind::DotDot => "`..`".to_string(),
            TokenKind::Semicolon => "`;`".to_string(),
            TokenKind::Star => "`*`".to_string(),
            TokenKind::Minus => "`-`".to_string(),
            TokenKind::Lt => "`<`".to_string(),
            TokenKind::Gt => "`>`".to_string(),
            TokenKind::Le => "`<=`".to_string(),
            TokenKind::Ge => "`>=`".to_string(),
            TokenKind::Eq => "`=`".to_string(),
            TokenKind::Ne => "`<>`".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Tokenize a query. `//` line comments are skipped. An empty or whitespace
/// only source, an unterminated string, or an illegal character produce a
/// `SyntaxError` diagnostic.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => push_single(&mut tokens, TokenKind::LParen, &mut i),
            b')' => push_single(&mut tokens, TokenKind::RParen, &mut i),
            b'[' => push_single(&mut tokens, TokenKind::LBracket, &mut i),
            b']' => push_single(&mut tokens, TokenKind::RBracket, &mut i),
            b'{' => push_single(&mut tokens, TokenKind::LBrace, &mut i),
            b'}' => push_single(&mut tokens, TokenKind::RBrace, &mut i),
            b':' => push_single(&mut tokens, TokenKind::Colon, &mut i),
            b',' => push_single(&mut tokens, TokenKind::Comma, &mut i),
            b';' => push_single(&mut tokens, TokenKind::Semicolon, &mut i),
            b'*' => push_single(&mut tokens, TokenKind::Star, &mut i),
            b'-' => push_single(&mut tokens, TokenKind::Minus, &mut i),
            b'=' => push_single(&mut tokens, TokenKind::Eq, &mut i),
            b'.' => {
                if bytes.get(i + 1) == Some(&b'.') {
                    tokens.push(Token { kind: TokenKind::DotDot, span: Span::new(i, i + 2) });
                    i += 2;
                } else {
                    push_single(&mut tokens, TokenKind::Dot, &mut i);
                }
            }
            b'<' => match bytes.get(i + 1) {
                Some(&b'=') => push_double(&mut tokens, TokenKind::Le, &mut i),
                Some(&b'>') => push_double(&mut tokens, TokenKind::Ne, &mut i),
                _ => push_single(&mut tokens, TokenKind::Lt, &mut i),
            },
            b'>' => match bytes.get(i + 1) {
                Some(&b'=') => push_double(&mut tokens, TokenKind::Ge, &mut i),
                _ => push_single(&mut tokens, TokenKind::Gt, &mut i),
            },
            b'"' | b'\'' => {
                let (token, next) = lex_string(source, i)?;
                tokens.push(token);
                i = next;
            }
            b'0'..=b'9' => {
                let (token, next) = lex_number(source, i)?;
                tokens.push(token);
                i = next;
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &source[start..i];
                let kind = match Keyword::from_word(word) {
                    Some(kw) => TokenKind::Keyword(kw),
                    None => TokenKind::Ident(word.to_string()),
                };
                tokens.push(Token { kind, span: Span::new(start, i) });
            }
            _ => {
                let ch = source[i..].chars().next().unwrap_or('?');
                return Err(Diagnostic::new(
                    ErrorClass::SyntaxError,
                    Span::new(i, i + ch.len_utf8()),
                    format!("unexpected character `{ch}`"),
                ));
            }
        }
    }

    if tokens.is_empty() {
        return Err(Diagnostic::new(
            ErrorClass::SyntaxError,
            Span::point(0),
            "query text is empty",
        ));
    }
    Ok(tokens)
}

fn push_single(tokens: &mut Vec<Token>, kind: TokenKind, i: &mut usize) {
    tokens.push(Token { kind, span: Span::new(*i, *i + 1) });
    *i += 1;
}

fn push_double(tokens: &mut Vec<Token>, kind: TokenKind, i: &mut usize) {
    tokens.push(Token { kind, span: Span::new(*i, *i + 2) });
    *i += 2;
}

fn lex_string(source: &str, start: usize) -> Result<(Token, usize), Diagnostic> {
    let bytes = source.as_bytes();
    let quote = bytes[start];
    let mut value = String::new();
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => {
                let escaped = match bytes.get(i + 1) {
                    Some(b'n') => '\n',
                    Some(b't') => '\t',
                    Some(b'r') => '\r',
                    Some(b'\\') => '\\',
                    Some(b'"') => '"',
                    Some(b'\'') => '\'',
                    Some(&other) => {
                        return Err(Diagnostic::new(
                            ErrorClass::SyntaxError,
                            Span::new(i, i + 2),
                            format!("unsupported escape sequence `\\{}`", other as char),
                        ));
                    }
                    None => break,
                };
                value.push(escaped);
                i += 2;
            }
            b if b == quote => {
                return Ok((
                    Token { kind: TokenKind::Str(value), span: Span::new(start, i + 1) },
                    i + 1,
                ));
            }
            _ => {
                let ch = source[i..].chars().next().expect("in-bounds char");
                value.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    Err(Diagnostic::new(
        ErrorClass::SyntaxError,
        Span::new(start, source.len()),
        "unterminated string literal",
    ))
}

fn lex_number(source: &str, start: usize) -> Result<(Token, usize), Diagnostic> {
    let bytes = source.as_bytes();
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    // A dot starts a fraction only when followed by a digit; `1..3` must lex
    // as integer, `..`, integer.
    let mut is_float = false;
    if i < bytes.len()
        && bytes[i] == b'.'
        && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())
    {
        is_float = true;
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    let text = &source[start..i];
    let span = Span::new(start, i);
    let kind = if is_float {
        let value: f64 = text
            .parse()
            .map_err(|_| Diagnostic::new(ErrorClass::SyntaxError, span, format!("invalid number `{text}`")))?;
        TokenKind::Float(value)
    } else {
        let value: i64 = text.parse().map_err(|_| {
            Diagnostic::new(ErrorClass::SyntaxError, span, format!("integer literal `{text}` is out of range"))
        })?;
        TokenKind::Int(value)
    };
    Ok((Token { kind, span }, i))
}
