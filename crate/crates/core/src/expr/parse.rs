//! Recursive-descent parser for the infix expression grammar.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | base ("^" factor)?
//! base   := number | ident | ident "(" expr ("," expr)? ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u^2`
//! is `-(u^2)`. Results are returned in simplified form.

use thiserror::Error;

use super::{simplify, Expr, Func, FUNCTION_NAMES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    BadNumber(String),
    UndeclaredIdentifier(String),
    UnknownFunction(String),
    WrongArity { function: String, found: usize },
    FunctionWithoutCall(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at column {}", .position + 1)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Zero-based character offset into the input.
    pub position: usize,
    message: String,
}

impl ParseError {
    fn new(kind: ParseErrorKind, position: usize) -> Self {
        let message = match &kind {
            ParseErrorKind::UnexpectedChar(c) => format!("unexpected character '{c}'"),
            ParseErrorKind::UnexpectedToken(t) => format!("unexpected token '{t}'"),
            ParseErrorKind::UnexpectedEnd => "unexpected end of input".to_string(),
            ParseErrorKind::BadNumber(n) => format!("invalid number '{n}'"),
            ParseErrorKind::UndeclaredIdentifier(n) => format!("undeclared identifier '{n}'"),
            ParseErrorKind::UnknownFunction(n) => format!("unknown function '{n}'"),
            ParseErrorKind::WrongArity { function, found } => {
                format!("function '{function}' does not take {found} argument(s)")
            }
            ParseErrorKind::FunctionWithoutCall(n) => {
                format!("function '{n}' used without an argument list")
            }
        };
        ParseError {
            kind,
            position,
            message,
        }
    }

    pub fn undeclared(&self) -> Option<&str> {
        match &self.kind {
            ParseErrorKind::UndeclaredIdentifier(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(n) => n.to_string(),
            Token::Ident(s) => s.clone(),
            Token::Plus => "+".into(),
            Token::Minus => "-".into(),
            Token::Star => "*".into(),
            Token::Slash => "/".into(),
            Token::Caret => "^".into(),
            Token::LParen => "(".into(),
            Token::RParen => ")".into(),
            Token::Comma => ",".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let single = match c {
            '+' => Some(Token::Plus),
            '-' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            ',' => Some(Token::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push((tok, start));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal: String = chars[start..i].iter().collect();
            let value: f64 = literal
                .parse()
                .map_err(|_| ParseError::new(ParseErrorKind::BadNumber(literal.clone()), start))?;
            if !value.is_finite() {
                return Err(ParseError::new(ParseErrorKind::BadNumber(literal), start));
            }
            tokens.push((Token::Number(value), start));
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push((Token::Ident(chars[start..i].iter().collect()), start));
        } else {
            return Err(ParseError::new(ParseErrorKind::UnexpectedChar(c), start));
        }
    }
    Ok(tokens)
}

struct Parser<'a, S> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
    variables: &'a [S],
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError::new(ParseErrorKind::UnexpectedToken(tok.describe()), self.offset()),
            None => ParseError::new(ParseErrorKind::UnexpectedEnd, self.end),
        }
    }

    fn expect(&mut self, expected: Token) -> Result<(), ParseError> {
        if self.peek() == Some(&expected) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Number(value)) => {
                self.pos += 1;
                Ok(Expr::Const(value))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Token::LParen) {
                    self.pos += 1;
                    self.call(name, offset)
                } else if FUNCTION_NAMES.contains(&name.as_str()) {
                    Err(ParseError::new(ParseErrorKind::FunctionWithoutCall(name), offset))
                } else if self.variables.iter().any(|v| v.as_ref() == name) {
                    Ok(Expr::var(&name))
                } else {
                    Err(ParseError::new(ParseErrorKind::UndeclaredIdentifier(name), offset))
                }
            }
            _ => Err(self.unexpected()),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        let first = self.expr()?;
        let second = if self.peek() == Some(&Token::Comma) {
            self.pos += 1;
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Token::RParen)?;
        let arity = if second.is_some() { 2 } else { 1 };
        let wrong_arity = || {
            ParseError::new(
                ParseErrorKind::WrongArity {
                    function: name.clone(),
                    found: arity,
                },
                offset,
            )
        };
        match (name.as_str(), second) {
            ("atan2" | "atan", Some(x)) => Ok(Expr::Atan2(Box::new(first), Box::new(x))),
            ("atan2", None) => Err(wrong_arity()),
            (_, second) => match Func::from_name(&name) {
                Some(f) if second.is_none() => Ok(Expr::Call(f, Box::new(first))),
                Some(_) => Err(wrong_arity()),
                None => Err(ParseError::new(ParseErrorKind::UnknownFunction(name.clone()), offset)),
            },
        }
    }
}

/// Parses `text` over the declared `variables` and returns the simplified tree.
pub fn parse<S: AsRef<str>>(text: &str, variables: &[S]) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.chars().count(),
        variables,
    };
    let raw = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.unexpected());
    }
    Ok(simplify(&raw))
}
