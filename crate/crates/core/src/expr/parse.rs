//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' exponent)?
//! exponent := '-' exponent | primary ('^' exponent)?     (must be constant)
//! primary  := number | 'x'<index> | name | func '(' expr ')' | '(' expr ')'
//! func     := 'exp' | 'log' | 'sqrt'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x0^2`
//! is `-(x0^2)`. Named parameters are resolved to constants while parsing;
//! negative parameter values become a negated constant so the printed form
//! re-parses to the same tree.

use std::collections::HashMap;

use super::{BinaryOp, Expression, Node, UnaryOp};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("variable x{index} at byte {position} out of range for {n_vars} variables")]
    VariableOutOfRange { index: usize, n_vars: usize, position: usize },
    #[error("exponent at byte {position} is not a constant")]
    NonConstantExponent { position: usize },
    #[error("{n_vars} variables requested, between 1 and {max} supported")]
    TooManyVariables { n_vars: usize, max: usize },
}

/// Parses `text` as a function of `n_vars` variables `x0..x{n_vars-1}`.
pub fn parse(text: &str, n_vars: usize) -> Result<Expression, ParseError> {
    parse_with_params(text, n_vars, &HashMap::new())
}

/// Like [`parse`], resolving bare identifiers through `params`.
pub fn parse_with_params(
    text: &str,
    n_vars: usize,
    params: &HashMap<String, f64>,
) -> Result<Expression, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, n_vars, params, end: text.len() };
    let root = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::Syntax {
            position: tok.position,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Expression::new(root, n_vars)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Number(v) => format!("number {v}"),
            Kind::Ident(s) => format!("identifier `{s}`"),
            Kind::Op(c) => format!("operator `{c}`"),
            Kind::LParen => "`(`".into(),
            Kind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    position: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push(Token { kind: Kind::Op(c as char), position: start });
                i += 1;
            }
            b'(' => {
                out.push(Token { kind: Kind::LParen, position: start });
                i += 1;
            }
            b')' => {
                out.push(Token { kind: Kind::RParen, position: start });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let literal = &text[start..i];
                let value: f64 = literal.parse().map_err(|_| ParseError::Syntax {
                    position: start,
                    message: format!("malformed number `{literal}`"),
                })?;
                out.push(Token { kind: Kind::Number(value), position: start });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token { kind: Kind::Ident(text[start..i].to_string()), position: start });
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    position: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    n_vars: usize,
    params: &'a HashMap<String, f64>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn eat_op(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: Kind::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn position(&self) -> usize {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op('+') {
                BinaryOp::Add
            } else if self.eat_op('-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op('*') {
                BinaryOp::Mul
            } else if self.eat_op('/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat_op('-') {
            return Ok(Node::unary(UnaryOp::Neg, self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.eat_op('^') {
            let position = self.position();
            let exponent = self.exponent()?;
            let value = exponent
                .fold_constant()
                .filter(|v| v.is_finite())
                .ok_or(ParseError::NonConstantExponent { position })?;
            return Ok(Node::pow(base, value));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Node, ParseError> {
        if self.eat_op('-') {
            return Ok(Node::unary(UnaryOp::Neg, self.exponent()?));
        }
        let base = self.primary()?;
        if self.eat_op('^') {
            let position = self.position();
            let inner = self.exponent()?;
            let value = inner
                .fold_constant()
                .ok_or(ParseError::NonConstantExponent { position })?;
            return Ok(Node::pow(base, value));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let end = self.end;
        let Some(tok) = self.next() else {
            return Err(ParseError::Syntax { position: end, message: "unexpected end of input".into() });
        };
        match tok.kind {
            Kind::Number(v) => Ok(Node::constant(v)),
            Kind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Kind::Ident(name) => self.identifier(name, tok.position),
            other => Err(ParseError::Syntax {
                position: tok.position,
                message: format!("expected operand, found {}", other.describe()),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let position = self.position();
        match self.next() {
            Some(Token { kind: Kind::RParen, .. }) => Ok(()),
            _ => Err(ParseError::Syntax { position, message: "expected `)`".into() }),
        }
    }

    fn identifier(&mut self, name: String, position: usize) -> Result<Node, ParseError> {
        let func = match name.as_str() {
            "exp" => Some(UnaryOp::Exp),
            "log" => Some(UnaryOp::Log),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        };
        if let Some(op) = func {
            let open = self.position();
            if !matches!(self.next(), Some(Token { kind: Kind::LParen, .. })) {
                return Err(ParseError::Syntax { position: open, message: format!("expected `(` after `{name}`") });
            }
            let arg = self.expr()?;
            self.expect_rparen()?;
            return Ok(Node::unary(op, arg));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| ParseError::UnknownIdentifier {
                    name: name.clone(),
                    position,
                })?;
                if index >= self.n_vars {
                    return Err(ParseError::VariableOutOfRange { index, n_vars: self.n_vars, position });
                }
                return Ok(Node::var(index));
            }
        }
        match self.params.get(&name) {
            Some(&v) if v.is_sign_negative() => Ok(Node::unary(UnaryOp::Neg, Node::constant(-v))),
            Some(&v) => Ok(Node::constant(v)),
            None => Err(ParseError::UnknownIdentifier { name, position }),
        }
    }
}
