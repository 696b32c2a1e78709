use super::ast::Span;
use super::diag::{Diagnostic, DiagnosticKind};
use crate::runtime::value::normalize_angle;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Angle(f64),
    Prog,
    Tree,
    Node,
    Root,
    Cost,
    T,
    Nil,
    Not,
    And,
    Or,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Arrow,
    FatArrow,
    EqEq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Angle(a) => format!("angle `{a}rad`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    pub fn text(&self) -> &'static str {
        match self {
            Tok::Prog => "prog",
            Tok::Tree => "tree",
            Tok::Node => "node",
            Tok::Root => "root",
            Tok::Cost => "cost",
            Tok::T => "T",
            Tok::Nil => "nil",
            Tok::Not => "not",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Arrow => "->",
            Tok::FatArrow => "=>",
            Tok::EqEq => "==",
            Tok::Ident(_) => "identifier",
            Tok::Number(_) => "number",
            Tok::Angle(_) => "angle",
            Tok::Eof => "end of input",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "prog" => Tok::Prog,
        "tree" => Tok::Tree,
        "node" => Tok::Node,
        "root" => Tok::Root,
        "cost" => Tok::Cost,
        "T" => Tok::T,
        "nil" => Tok::Nil,
        "not" => Tok::Not,
        "and" => Tok::And,
        "or" => Tok::Or,
        "true" => Tok::True,
        "false" => Tok::False,
        _ => return None,
    })
}

pub fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

pub fn is_ident(word: &str) -> bool {
    let bytes = word.as_bytes();
    matches!(bytes.first(), Some(c) if c.is_ascii_alphabetic())
        && bytes.iter().enumerate().all(|(i, &c)| {
            c.is_ascii_alphanumeric()
                || c == b'_'
                || (c == b'-' && matches!(bytes.get(i + 1), Some(n) if n.is_ascii_alphanumeric()))
        })
        && !is_keyword(word)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while matches!(self.peek(), Some(c) if pred(c)) {
            self.bump();
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let mut cur = Cursor { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        // whitespace and `//` comments
        loop {
            match (cur.peek(), cur.peek2()) {
                (Some(c), _) if c.is_whitespace() => {
                    cur.bump();
                }
                (Some('/'), Some('/')) => cur.eat_while(|c| c != '\n'),
                _ => break,
            }
        }
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let Some(c) = cur.peek() else {
            out.push((Tok::Eof, Span::new(start, start, line, col)));
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() {
            loop {
                match (cur.peek(), cur.peek2()) {
                    (Some(c), _) if c.is_ascii_alphanumeric() || c == '_' => {
                        cur.bump();
                    }
                    (Some('-'), Some(n)) if n.is_ascii_alphanumeric() => {
                        cur.bump();
                    }
                    _ => break,
                }
            }
            let word = &src[start..cur.pos];
            keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
        } else if c.is_ascii_digit()
            || (c == '-' && matches!(cur.peek2(), Some(d) if d.is_ascii_digit() || d == '.'))
            || (c == '.' && matches!(cur.peek2(), Some(d) if d.is_ascii_digit()))
        {
            lex_number(&mut cur, start, line, col)?
        } else {
            cur.bump();
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                '-' if cur.peek() == Some('>') => {
                    cur.bump();
                    Tok::Arrow
                }
                '=' if cur.peek() == Some('>') => {
                    cur.bump();
                    Tok::FatArrow
                }
                '=' if cur.peek() == Some('=') => {
                    cur.bump();
                    Tok::EqEq
                }
                other => {
                    return Err(Diagnostic::new(
                        DiagnosticKind::SyntaxError { expected: vec![] },
                        Span::new(start, cur.pos, line, col),
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        out.push((tok, Span::new(start, cur.pos, line, col)));
    }
}

fn lex_number(cur: &mut Cursor<'_>, start: usize, line: u32, col: u32) -> Result<Tok, Diagnostic> {
    if cur.peek() == Some('-') {
        cur.bump();
    }
    cur.eat_while(|c| c.is_ascii_digit());
    if cur.peek() == Some('.') && matches!(cur.peek2(), Some(d) if d.is_ascii_digit()) {
        cur.bump();
        cur.eat_while(|c| c.is_ascii_digit());
    }
    if matches!(cur.peek(), Some('e') | Some('E')) {
        let rest = &cur.src[cur.pos + 1..];
        let digits_follow = rest.starts_with(|c: char| c.is_ascii_digit())
            || ((rest.starts_with('-') || rest.starts_with('+'))
                && rest[1..].starts_with(|c: char| c.is_ascii_digit()));
        if digits_follow {
            cur.bump();
            if matches!(cur.peek(), Some('-') | Some('+')) {
                cur.bump();
            }
            cur.eat_while(|c| c.is_ascii_digit());
        }
    }
    let text = &cur.src[start..cur.pos];
    let bad = |msg: String, end: usize| {
        Diagnostic::new(
            DiagnosticKind::SyntaxError { expected: vec!["number".into()] },
            Span::new(start, end, line, col),
            msg,
        )
    };
    let value: f64 = text.parse().map_err(|_| bad(format!("malformed number `{text}`"), cur.pos))?;
    if !value.is_finite() {
        return Err(bad(format!("number `{text}` is out of range"), cur.pos));
    }
    // unit suffix glued to the literal
    let suffix_start = cur.pos;
    cur.eat_while(|c| c.is_ascii_alphanumeric() || c == '_');
    match &cur.src[suffix_start..cur.pos] {
        "" => Ok(Tok::Number(value)),
        "deg" => Ok(Tok::Angle(normalize_angle(value.to_radians()))),
        "rad" => Ok(Tok::Angle(normalize_angle(value))),
        other => Err(bad(format!("unknown unit suffix `{other}` (expected `deg` or `rad`)"), cur.pos)),
    }
}
