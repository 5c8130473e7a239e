//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := ("-" | "+") unary | power
//! power  := base ("^" ["-"] integer)?
//! base   := number | ident | "(" expr ")" | func "(" expr ")"
//! func   := "exp" | "ln" | "abs"
//! ```
//!
//! `ln(u)` always means `ln|u|`, so `ln(abs(u))` and `ln(u)` parse to the same
//! tree. Numbers are exact decimals (`0.25`, `1e-3`); `p/q` is a division of
//! two numbers and folds to the rational constant.

use thiserror::Error;

use super::Expr;
use crate::rational::{parse_decimal, Rational};

/// Names that identifiers may resolve to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    coordinates: Vec<String>,
    params: Vec<String>,
}

impl SymbolTable {
    pub fn new(coordinates: Vec<String>, params: Vec<String>) -> Self {
        Self { coordinates, params }
    }

    /// Coordinates named `w1..wn`, no parameters.
    pub fn standard(dim: usize) -> Self {
        Self::new((1..=dim).map(|i| format!("w{i}")).collect(), Vec::new())
    }

    pub fn with_params<I: IntoIterator<Item = S>, S: Into<String>>(mut self, params: I) -> Self {
        self.params.extend(params.into_iter().map(Into::into));
        self
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    fn resolve(&self, name: &str) -> Option<Expr> {
        if let Some(i) = self.coordinates.iter().position(|c| c == name) {
            return Some(Expr::var(i));
        }
        self.params.iter().any(|p| p == name).then(|| Expr::param(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("exponent must be an integer")]
    ExpectedInteger,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(Rational, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(_, s) => format!("number `{s}`"),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Caret => "`^`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos] as char;
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let single = match c {
            '+' => Some(Token::Plus),
            '-' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((start, tok));
            pos += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            // exponent part, only when followed by a digit (optionally signed)
            if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                let mut look = pos + 1;
                if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                    look += 1;
                }
                if look < bytes.len() && bytes[look].is_ascii_digit() {
                    pos = look;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
            }
            let literal = &text[start..pos];
            let value = parse_decimal(literal).ok_or_else(|| ParseError {
                position: start,
                kind: ParseErrorKind::BadNumber(literal.to_string()),
            })?;
            out.push((start, Token::Number(value, literal.to_string())));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            out.push((start, Token::Ident(text[start..pos].to_string())));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or(c);
        return Err(ParseError {
            position: start,
            kind: ParseErrorKind::UnexpectedChar(ch),
        });
    }
    out.push((text.len(), Token::End));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    symbols: &'a SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.cursor].1
    }

    fn position(&self) -> usize {
        self.tokens[self.cursor].0
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.cursor].1.clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        tok
    }

    fn unexpected(&self) -> ParseError {
        let kind = match self.peek() {
            Token::End => ParseErrorKind::UnexpectedEnd,
            t => ParseErrorKind::UnexpectedToken(t.describe()),
        };
        ParseError {
            position: self.position(),
            kind,
        }
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.advance();
                    acc = Expr::sum([acc, self.term()?]);
                }
                Token::Minus => {
                    self.advance();
                    acc = Expr::sum([acc, self.term()?.negate()]);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.advance();
                    acc = Expr::product([acc, self.unary()?]);
                }
                Token::Slash => {
                    self.advance();
                    acc = acc.quotient(self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Token::Minus => {
                self.advance();
                Ok(self.unary()?.negate())
            }
            Token::Plus => {
                self.advance();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.advance();
        let negative = match self.peek() {
            Token::Minus => {
                self.advance();
                true
            }
            Token::Plus => {
                self.advance();
                false
            }
            _ => false,
        };
        let at = self.position();
        match self.advance() {
            Token::Number(value, _) if value.is_integer() => {
                let magnitude: i32 = value.numer().try_into().map_err(|_| ParseError {
                    position: at,
                    kind: ParseErrorKind::ExpectedInteger,
                })?;
                Ok(base.powi(if negative { -magnitude } else { magnitude }))
            }
            _ => Err(ParseError {
                position: at,
                kind: ParseErrorKind::ExpectedInteger,
            }),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.position();
        match self.peek().clone() {
            Token::Number(value, _) => {
                self.advance();
                Ok(Expr::Const(value))
            }
            Token::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::Ident(name) => {
                self.advance();
                let func = match name.as_str() {
                    "exp" => Some(Expr::exp as fn(Expr) -> Expr),
                    "ln" => Some(Expr::ln_abs as fn(Expr) -> Expr),
                    "abs" => Some(Expr::abs as fn(Expr) -> Expr),
                    _ => None,
                };
                if let Some(func) = func {
                    self.expect(Token::LParen)?;
                    let inner = self.expr()?;
                    self.expect(Token::RParen)?;
                    return Ok(func(inner));
                }
                self.symbols.resolve(&name).ok_or(ParseError {
                    position: at,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                })
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses `text` against the coordinate and parameter names in `symbols`.
pub fn parse(text: &str, symbols: &SymbolTable) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, cursor: 0, symbols };
    let e = parser.expr()?;
    if *parser.peek() != Token::End {
        return Err(parser.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use crate::rational::int;

    fn xy() -> SymbolTable {
        SymbolTable::new(vec!["x".into(), "y".into()], vec!["a".into(), "b".into()])
    }

    #[test]
    fn product_minus_constant() {
        let e = parse("w1*w2 - 2", &SymbolTable::standard(2)).unwrap();
        assert_eq!(e, Expr::sum([Expr::product([Expr::var(0), Expr::var(1)]), Expr::int(-2)]));
    }

    #[test]
    fn case_2b_lagrangian_shape() {
        let e = parse("b^2*x*exp(y/(b*x))", &xy()).unwrap();
        let b = Expr::param("b");
        let expected = b.clone().powi(2) * Expr::var(0) * (Expr::var(1).quotient(&b * &Expr::var(0))).exp();
        assert_eq!(e, expected);
    }

    #[test]
    fn ln_of_abs_collapses() {
        let e = parse("ln(abs(b*x - y))", &xy()).unwrap();
        let inner = Expr::param("b") * Expr::var(0) - Expr::var(1);
        assert_eq!(e, Expr::LnAbs(Box::new(inner.clone())));
        assert_eq!(parse("ln(b*x - y)", &xy()).unwrap(), e);
    }

    #[test]
    fn ratios_and_decimals_are_exact() {
        let e = parse("1/3*x + 0.25", &xy()).unwrap();
        let p = Params::new();
        let v = e.eval_exact(&[int(3), int(0)], &p).unwrap();
        assert_eq!(v, crate::rational::frac(5, 4));
    }

    #[test]
    fn negative_exponent_and_unary_minus() {
        let e = parse("-x^2 + y^-1", &xy()).unwrap();
        let v = e.eval(&[2.0, 4.0], &Params::new()).unwrap();
        assert_eq!(v, -4.0 + 0.25);
    }

    #[test]
    fn unknown_identifier_reports_position() {
        let err = parse("x + z", &xy()).unwrap_err();
        assert_eq!(err.position, 4);
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("z".into()));
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(parse("x +", &xy()).unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse("(x", &xy()).unwrap_err().position, 2);
        assert_eq!(parse("x ^ 1.5", &xy()).unwrap_err().kind, ParseErrorKind::ExpectedInteger);
        assert_eq!(parse("x $ y", &xy()).unwrap_err().kind, ParseErrorKind::UnexpectedChar('$'));
        assert!(matches!(parse("x y", &xy()).unwrap_err().kind, ParseErrorKind::UnexpectedToken(_)));
        assert!(matches!(parse("exp x", &xy()).unwrap_err().kind, ParseErrorKind::UnexpectedToken(_)));
    }

    #[test]
    fn printer_round_trip() {
        let sym = xy();
        for text in [
            "-x*ln(abs(b*x - y))",
            "x*(b*x - a*y)",
            "1/2*(x^2 + 2*y^2) - 3",
            "x/(y - 1)^2 + exp(-x/y)",
            "abs(x)^-3*(1/3)",
            "-(x/y) + 2*(x/(y + 1))",
        ] {
            let e = parse(text, &sym).unwrap();
            let printed = e.display(sym.coordinates()).to_string();
            let reparsed = parse(&printed, &sym).unwrap();
            assert_eq!(reparsed, e, "{text} printed as {printed}");
        }
    }
}
