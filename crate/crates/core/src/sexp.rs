//! A small S-expression reader and printer: atoms and lists, `;` line
//! comments, canonical single-space printing.

use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(s: impl Into<String>) -> Sexp {
        Sexp::Atom(s.into())
    }

    pub fn list(items: impl IntoIterator<Item = Sexp>) -> Sexp {
        Sexp::List(items.into_iter().collect())
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            _ => None,
        }
    }

    /// Head atom of a list, e.g. `lam` in `(lam (x Nat) x)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

impl std::fmt::Display for Sexp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sexp::Atom(a) => write!(f, "{a}"),
            Sexp::List(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Nesting bound; deeper input is rejected rather than risking the stack.
const MAX_DEPTH: usize = 4096;

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Debug)]
enum Token {
    Open,
    Close,
    Atom(String),
    Eof,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, message: message.into() }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b) if (b as char).is_whitespace() => {
                    self.bump();
                }
                Some(b';') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        match self.peek() {
            None => Ok(Token::Eof),
            Some(b'(') => {
                self.bump();
                Ok(Token::Open)
            }
            Some(b')') => {
                self.bump();
                Ok(Token::Close)
            }
            Some(_) => {
                let mut atom = String::new();
                while let Some(b) = self.peek() {
                    if b == b'(' || b == b')' || b == b';' || (b as char).is_whitespace() {
                        break;
                    }
                    atom.push(self.bump().expect("peeked") as char);
                }
                Ok(Token::Atom(atom))
            }
        }
    }
}

fn parse_one(lexer: &mut Lexer, depth: usize) -> Result<Option<Sexp>, ParseError> {
    if depth > MAX_DEPTH {
        return Err(lexer.error("nesting too deep"));
    }
    match lexer.next()? {
        Token::Eof => Ok(None),
        Token::Close => Err(lexer.error("unexpected `)`")),
        Token::Atom(a) => Ok(Some(Sexp::Atom(a))),
        Token::Open => {
            let mut items = Vec::new();
            loop {
                lexer.skip_trivia();
                if lexer.peek() == Some(b')') {
                    lexer.bump();
                    return Ok(Some(Sexp::List(items)));
                }
                match parse_one(lexer, depth + 1)? {
                    Some(s) => items.push(s),
                    None => return Err(lexer.error("unclosed `(`")),
                }
            }
        }
    }
}

/// Parse exactly one S-expression.
pub fn parse(src: &str) -> Result<Sexp, ParseError> {
    let mut lexer = Lexer::new(src);
    let first = parse_one(&mut lexer, 0)?.ok_or_else(|| lexer.error("empty input"))?;
    lexer.skip_trivia();
    if lexer.peek().is_some() {
        return Err(lexer.error("trailing content after the first expression"));
    }
    Ok(first)
}

/// Parse a sequence of S-expressions.
pub fn parse_many(src: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut lexer = Lexer::new(src);
    let mut out = Vec::new();
    while let Some(s) = parse_one(&mut lexer, 0)? {
        out.push(s);
    }
    Ok(out)
}
