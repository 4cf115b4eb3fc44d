//! Closed-form coefficient expressions.
//!
//! A deliberately small language: real literals, the variables `x` and `y`,
//! the constant `pi`, the binary operators `+ - * / ^`, unary minus and the
//! functions `sin cos exp log sqrt abs`. Precedence from tightest to loosest
//! is `^`, unary `-`, `* /`, `+ -`; `^` associates to the right, so `-x^2`
//! is `-(x^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("illegal character {ch:?} at offset {offset}")]
    IllegalCharacter { ch: char, offset: usize },
    #[error("malformed number {text:?} at offset {offset}")]
    MalformedNumber { text: String, offset: usize },
    #[error("unexpected token {found} at offset {offset}")]
    UnexpectedToken { found: String, offset: usize },
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParentheses { offset: usize },
    #[error("unknown function or identifier {name:?} at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("trailing input at offset {offset}")]
    TrailingInput { offset: usize },
    #[error("{func} of negative argument {arg}")]
    DomainError { func: &'static str, arg: f64 },
    #[error("negative base {base} raised to non-integer power {exp}")]
    ComplexPower { base: f64, exp: f64 },
    #[error("expression references `y` but no y coordinate is available")]
    MissingVariable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TokenKind {
    Num(f64),
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

/// A lexed token. `text` is the source slice, `offset` its byte position.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub offset: usize,
}

impl Token {
    fn describe(&self) -> String {
        format!("{:?}", self.text)
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let single = |kind| Token {
            kind,
            text: (c as char).to_string(),
            offset: start,
        };
        match c {
            b'+' => tokens.push(single(TokenKind::Plus)),
            b'-' => tokens.push(single(TokenKind::Minus)),
            b'*' => tokens.push(single(TokenKind::Star)),
            b'/' => tokens.push(single(TokenKind::Slash)),
            b'^' => tokens.push(single(TokenKind::Caret)),
            b'(' => tokens.push(single(TokenKind::LParen)),
            b')' => tokens.push(single(TokenKind::RParen)),
            b',' => tokens.push(single(TokenKind::Comma)),
            b'0'..=b'9' | b'.' => {
                pos = scan_number(bytes, pos);
                let text = &source[start..pos];
                let value = text.parse::<f64>().map_err(|_| ExprError::MalformedNumber {
                    text: text.to_string(),
                    offset: start,
                })?;
                tokens.push(Token {
                    kind: TokenKind::Num(value),
                    text: text.to_string(),
                    offset: start,
                });
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                    pos += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident,
                    text: source[start..pos].to_string(),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = source[start..].chars().next().unwrap_or('\u{fffd}');
                return Err(ExprError::IllegalCharacter { ch, offset: start });
            }
        }
        pos += 1;
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
        pos += 1;
    }
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
    pos
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
    Call(Func, Box<ExprAst>),
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end_offset: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        self.pos += 1;
        tok
    }

    fn unexpected(&self, tok: Option<&Token>) -> ExprError {
        match tok {
            Some(t) => ExprError::UnexpectedToken {
                found: t.describe(),
                offset: t.offset,
            },
            None => ExprError::UnexpectedToken {
                found: "end of input".into(),
                offset: self.end_offset,
            },
        }
    }

    fn expression(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.term()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ExprAst, ExprError> {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Minus {
                self.pos += 1;
                return Ok(ExprAst::Neg(Box::new(self.unary()?)));
            }
            if tok.kind == TokenKind::Plus {
                self.pos += 1;
                return self.unary();
            }
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst, ExprError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Caret) {
            self.pos += 1;
            // exponent may carry its own sign: 2^-1
            let exp = self.unary_exponent()?;
            return Ok(ExprAst::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary_exponent(&mut self) -> Result<ExprAst, ExprError> {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Minus {
                self.pos += 1;
                return Ok(ExprAst::Neg(Box::new(self.unary_exponent()?)));
            }
        }
        self.power()
    }

    fn atom(&mut self) -> Result<ExprAst, ExprError> {
        let tok = self.bump();
        let Some(tok) = tok else {
            return Err(self.unexpected(None));
        };
        match tok.kind {
            TokenKind::Num(v) => Ok(ExprAst::Num(v)),
            TokenKind::LParen => {
                let inner = self.expression()?;
                self.close_paren(tok.offset)?;
                Ok(inner)
            }
            TokenKind::Ident => match tok.text.as_str() {
                "x" => Ok(ExprAst::Var(Var::X)),
                "y" => Ok(ExprAst::Var(Var::Y)),
                "pi" => Ok(ExprAst::Pi),
                name => {
                    let func = Func::from_name(name).ok_or_else(|| ExprError::UnknownFunction {
                        name: name.to_string(),
                        offset: tok.offset,
                    })?;
                    match self.bump() {
                        Some(t) if t.kind == TokenKind::LParen => {
                            let arg = self.expression()?;
                            self.close_paren(t.offset)?;
                            Ok(ExprAst::Call(func, Box::new(arg)))
                        }
                        other => Err(self.unexpected(other)),
                    }
                }
            },
            TokenKind::RParen => Err(ExprError::UnbalancedParentheses { offset: tok.offset }),
            _ => Err(self.unexpected(Some(tok))),
        }
    }

    fn close_paren(&mut self, open_offset: usize) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::RParen => {
                self.pos += 1;
                Ok(())
            }
            None => Err(ExprError::UnbalancedParentheses { offset: open_offset }),
            other => Err(self.unexpected(other)),
        }
    }
}

pub fn parse(tokens: &[Token]) -> Result<ExprAst, ExprError> {
    if tokens.is_empty() {
        return Err(ExprError::Empty);
    }
    let end_offset = tokens.last().map(|t| t.offset + t.text.len()).unwrap_or(0);
    let mut parser = Parser {
        tokens,
        pos: 0,
        end_offset,
    };
    let ast = parser.expression()?;
    if let Some(tok) = parser.peek() {
        if tok.kind == TokenKind::RParen {
            return Err(ExprError::UnbalancedParentheses { offset: tok.offset });
        }
        return Err(ExprError::TrailingInput { offset: tok.offset });
    }
    Ok(ast)
}

impl ExprAst {
    pub fn uses(&self, var: Var) -> bool {
        match self {
            ExprAst::Var(v) => *v == var,
            ExprAst::Num(_) | ExprAst::Pi => false,
            ExprAst::Neg(e) | ExprAst::Call(_, e) => e.uses(var),
            ExprAst::Binary(_, l, r) => l.uses(var) || r.uses(var),
        }
    }

    pub fn uses_y(&self) -> bool {
        self.uses(Var::Y)
    }

    pub fn eval(&self, x: f64, y: Option<f64>) -> Result<f64, ExprError> {
        Ok(match self {
            ExprAst::Num(v) => *v,
            ExprAst::Pi => std::f64::consts::PI,
            ExprAst::Var(Var::X) => x,
            ExprAst::Var(Var::Y) => y.ok_or(ExprError::MissingVariable)?,
            ExprAst::Neg(e) => -e.eval(x, y)?,
            ExprAst::Call(f, e) => {
                let arg = e.eval(x, y)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => arg.exp(),
                    Func::Abs => arg.abs(),
                    Func::Log if arg < 0.0 => return Err(ExprError::DomainError { func: "log", arg }),
                    Func::Log => arg.ln(),
                    Func::Sqrt if arg < 0.0 => return Err(ExprError::DomainError { func: "sqrt", arg }),
                    Func::Sqrt => arg.sqrt(),
                }
            }
            ExprAst::Binary(op, l, r) => {
                let a = l.eval(x, y)?;
                let b = r.eval(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(ExprError::ComplexPower { base: a, exp: b });
                        }
                        if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                            a.powi(b as i32)
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
        })
    }
}

/// Canonical, fully parenthesised rendering. Literals print with `{:?}`,
/// which round-trips every finite `f64` exactly.
impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Num(v) => write!(f, "{v:?}"),
            ExprAst::Pi => write!(f, "pi"),
            ExprAst::Var(Var::X) => write!(f, "x"),
            ExprAst::Var(Var::Y) => write!(f, "y"),
            ExprAst::Neg(e) => write!(f, "(-{e})"),
            ExprAst::Call(func, e) => write!(f, "{}({e})", func.name()),
            ExprAst::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l}{sym}{r})")
            }
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    ast: ExprAst,
}

impl Expr {
    pub fn new(source: &str) -> Result<Self, ExprError> {
        let tokens = tokenize(source)?;
        let ast = parse(&tokens)?;
        Ok(Self {
            source: source.trim().to_string(),
            ast,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            source: format!("{value:?}"),
            ast: ExprAst::Num(value),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &ExprAst {
        &self.ast
    }

    pub fn uses_y(&self) -> bool {
        self.ast.uses_y()
    }

    pub fn eval(&self, x: f64, y: Option<f64>) -> Result<f64, ExprError> {
        self.ast.eval(x, y)
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::new(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}
