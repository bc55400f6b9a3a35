//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus on its left,
//! so `-x^2` is `-(x^2)` and `x^-2` is `x^(-2)`.

use super::{BinOp, Chart, Expr, Func};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("unknown function `{name}` at position {position}")]
    UnknownFunction { name: String, position: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. }
            | ParseError::UnknownIdentifier { position, .. }
            | ParseError::UnknownFunction { position, .. } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Token, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&c) = bytes.get(start) else {
            return Ok((Token::End, start));
        };
        let token = match c {
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Token::Op(c as char)
            }
            b'0'..=b'9' | b'.' => Token::Number(self.number()?),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self
                    .src
                    .as_bytes()
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
                {
                    self.pos += 1;
                }
                Token::Ident(self.src[start..self.pos].to_string())
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    position: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        Ok((token, start))
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let from = *pos;
            while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
                *pos += 1;
            }
            *pos - from
        };
        let mut pos = self.pos;
        let mut count = digits(&mut pos);
        if bytes.get(pos) == Some(&b'.') {
            pos += 1;
            count += digits(&mut pos);
        }
        if count == 0 {
            return Err(ParseError::Syntax { position: start, message: "malformed number".into() });
        }
        if matches!(bytes.get(pos), Some(b'e' | b'E')) {
            let mut exp = pos + 1;
            if matches!(bytes.get(exp), Some(b'+' | b'-')) {
                exp += 1;
            }
            if digits(&mut exp) == 0 {
                return Err(ParseError::Syntax { position: exp, message: "malformed exponent".into() });
            }
            pos = exp;
        }
        self.pos = pos;
        self.src[start..pos]
            .parse::<f64>()
            .map_err(|e| ParseError::Syntax { position: start, message: e.to_string() })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    chart: &'a Chart,
    token: Token,
    token_pos: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (token, pos) = self.lexer.next()?;
        self.token = token;
        self.token_pos = pos;
        Ok(())
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { position: self.token_pos, message: message.into() })
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.token {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.product()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.token {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.token == Token::Op('-') {
            self.advance()?;
            return Ok(self.unary()?.apply(Func::Neg));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.token == Token::Op('^') {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.token != Token::RParen {
            return self.error("expected `)`");
        }
        self.advance()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.token_pos;
        match std::mem::replace(&mut self.token, Token::End) {
            Token::Number(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                self.advance()?;
                if self.token == Token::LParen {
                    let func = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { name, position: pos })?;
                    self.advance()?;
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return Ok(arg.apply(func));
                }
                self.chart
                    .index_of(&name)
                    .map(Expr::Coord)
                    .ok_or(ParseError::UnknownIdentifier { name, position: pos })
            }
            other => {
                self.token = other;
                match self.token {
                    Token::End => self.error("unexpected end of input"),
                    _ => self.error("expected a number, identifier or `(`"),
                }
            }
        }
    }
}

/// Parses `src` with identifiers resolved against `chart`.
pub fn parse(src: &str, chart: &Chart) -> Result<Expr, ParseError> {
    let mut parser = Parser { lexer: Lexer { src, pos: 0 }, chart, token: Token::End, token_pos: 0 };
    parser.advance()?;
    let expr = parser.sum()?;
    if parser.token != Token::End {
        return parser.error("unexpected trailing input");
    }
    Ok(expr)
}
