//! Expression language for user-defined supremands.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ('-')? power
//! power  := atom ('^' factor)?
//! atom   := number | ident | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Power is right associative and binds tighter than unary minus, so
//! `-2^2 = -4` and `2^-1 = 0.5`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::jet::Tensor3;
use crate::linalg::Mat2;
use crate::math;

/// Identifier set, fixed to the `n, N ≤ 2` slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    /// `x1`, `x2`
    X(u8),
    /// `u1`, `u2`
    U(u8),
    /// `g{α}{i}` = ∂_i u_α
    G(u8, u8),
    /// `s11`, `s12`, `s22`: Gram entries
    S(u8, u8),
    /// identity-ray parameter
    T,
    /// `h{α}{i}{j}` = ∂_i ∂_j u_α
    H(u8, u8, u8),
}

impl Var {
    fn lookup(name: &str) -> Option<Var> {
        let b = name.as_bytes();
        let digit = |c: u8| match c {
            b'1' => Some(0u8),
            b'2' => Some(1u8),
            _ => None,
        };
        match (b.first(), b.len()) {
            (Some(b't'), 1) => Some(Var::T),
            (Some(b'x'), 2) => digit(b[1]).map(Var::X),
            (Some(b'u'), 2) => digit(b[1]).map(Var::U),
            (Some(b'g'), 3) => Some(Var::G(digit(b[1])?, digit(b[2])?)),
            (Some(b's'), 3) => {
                let (i, j) = (digit(b[1])?, digit(b[2])?);
                (i <= j).then_some(Var::S(i, j))
            }
            (Some(b'h'), 4) => Some(Var::H(digit(b[1])?, digit(b[2])?, digit(b[3])?)),
            _ => None,
        }
    }

    /// True for variables carrying top-order derivative data.
    pub fn is_derivative(&self) -> bool {
        matches!(self, Var::G(..) | Var::S(..) | Var::T | Var::H(..))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::U(i) => write!(f, "u{}", i + 1),
            Var::G(a, i) => write!(f, "g{}{}", a + 1, i + 1),
            Var::S(i, j) => write!(f, "s{}{}", i + 1, j + 1),
            Var::T => f.write_str("t"),
            Var::H(a, i, j) => write!(f, "h{}{}{}", a + 1, i + 1, j + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Sin,
    Cos,
    Exp,
    Min,
    Max,
    Pow,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Values bound to the identifiers during evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Env {
    pub x: [f64; 2],
    pub u: [f64; 2],
    pub g: Mat2,
    /// `[s11, s12, s22]`
    pub s: [f64; 3],
    pub t: f64,
    pub h: Tensor3,
}

impl Expr {
    pub fn eval(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => match *v {
                Var::X(i) => env.x[i as usize],
                Var::U(i) => env.u[i as usize],
                Var::G(a, i) => env.g[a as usize][i as usize],
                Var::S(0, 0) => env.s[0],
                Var::S(1, 1) => env.s[2],
                Var::S(..) => env.s[1],
                Var::T => env.t,
                Var::H(a, i, j) => env.h[a as usize][i as usize][j as usize],
            },
            Expr::Neg(e) => -e.eval(env),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env), b.eval(env));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => math::pow(a, b),
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(env);
                match func {
                    Func::Abs => a.abs(),
                    Func::Sqrt => math::sqrt(a),
                    Func::Sin => math::sin(a),
                    Func::Cos => math::cos(a),
                    Func::Exp => math::exp(a),
                    Func::Min => a.min(args[1].eval(env)),
                    Func::Max => a.max(args[1].eval(env)),
                    Func::Pow => math::pow(a, args[1].eval(env)),
                }
            }
        }
    }

    /// True if any identifier satisfies `pred`.
    pub fn any_var<F: Fn(Var) -> bool + Copy>(&self, pred: F) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => pred(*v),
            Expr::Neg(e) => e.any_var(pred),
            Expr::Bin(_, a, b) => a.any_var(pred) || b.any_var(pred),
            Expr::Call(_, args) => args.iter().any(|a| a.any_var(pred)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn write_min(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            fmt::Display::fmt(self, f)?;
            return f.write_str(")");
        }
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "-{}", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write_min(f, 4)
            }
            Expr::Bin(op, a, b) => {
                let (lhs, rhs) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                a.write_min(f, lhs)?;
                match op {
                    BinOp::Pow => f.write_str("^")?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                b.write_min(f, rhs)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedEnd,
    UnexpectedToken(String),
    InvalidCharacter(char),
    InvalidNumber(String),
    UnknownIdentifier(String),
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
    },
}

/// Parse failure with the byte offset it was detected at.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
    pub expected: Vec<&'static str>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ParseErrorKind::UnexpectedEnd => "syntax error: unexpected end of input".to_string(),
            ParseErrorKind::UnexpectedToken(t) => alloc::format!("syntax error: unexpected '{t}'"),
            ParseErrorKind::InvalidCharacter(c) => {
                alloc::format!("syntax error: invalid character {c:?}")
            }
            ParseErrorKind::InvalidNumber(t) => {
                alloc::format!("syntax error: invalid number '{t}'")
            }
            ParseErrorKind::UnknownIdentifier(name) => {
                alloc::format!("unknown identifier '{name}'")
            }
            ParseErrorKind::Arity {
                func,
                expected,
                found,
            } => {
                alloc::format!("{func} takes {expected} argument(s), got {found}")
            }
        };
        write!(f, "{what} at offset {}", self.offset)?;
        if !self.expected.is_empty() {
            f.write_str(", expected ")?;
            for (i, e) in self.expected.iter().enumerate() {
                if i > 0 {
                    f.write_str(" or ")?;
                }
                f.write_str(e)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(u8),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

const EXPRESSION: &[&str] = &["expression"];

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.advance()?;
        Ok(p)
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            let digits = |p: &mut usize| {
                while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                    *p += 1;
                }
            };
            digits(&mut self.pos);
            if self.pos < bytes.len() && bytes[self.pos] == b'.' {
                self.pos += 1;
                digits(&mut self.pos);
            }
            if self.pos < bytes.len() && (bytes[self.pos] | 0x20) == b'e' {
                let mut q = self.pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    self.pos = q;
                    digits(&mut self.pos);
                }
            }
            let text = &self.src[start..self.pos];
            self.tok = Tok::Num(text.parse::<f64>().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                expected: Vec::new(),
            })?);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return Err(ParseError {
                offset: self.pos,
                kind: ParseErrorKind::InvalidCharacter(ch),
                expected: Vec::new(),
            });
        }
        Ok(())
    }

    fn unexpected(&self, expected: &[&'static str]) -> ParseError {
        let kind = match &self.tok {
            Tok::End => ParseErrorKind::UnexpectedEnd,
            _ => ParseErrorKind::UnexpectedToken(self.src[self.tok_start..self.pos].to_string()),
        };
        ParseError {
            offset: self.tok_start,
            kind,
            expected: expected.to_vec(),
        }
    }

    fn eat(&mut self, sym: u8) -> Result<bool, ParseError> {
        if self.tok == Tok::Sym(sym) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'+') => BinOp::Add,
                Tok::Sym(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'*') => BinOp::Mul,
                Tok::Sym(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-')? {
            return Ok(Expr::Neg(Box::new(self.power()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^')? {
            return Ok(Expr::Bin(
                BinOp::Pow,
                Box::new(base),
                Box::new(self.factor()?),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::Sym(b'(') => {
                self.advance()?;
                let e = self.expr()?;
                if !self.eat(b')')? {
                    return Err(self.unexpected(&["')'", "operator"]));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                let start = self.tok_start;
                if let Some(func) = Func::lookup(&name) {
                    self.advance()?;
                    if !self.eat(b'(')? {
                        return Err(self.unexpected(&["'('"]));
                    }
                    let mut args = alloc::vec![self.expr()?];
                    while self.eat(b',')? {
                        args.push(self.expr()?);
                    }
                    if !self.eat(b')')? {
                        return Err(self.unexpected(&["')'", "','", "operator"]));
                    }
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            offset: start,
                            kind: ParseErrorKind::Arity {
                                func: func.name(),
                                expected: func.arity(),
                                found: args.len(),
                            },
                            expected: Vec::new(),
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else if let Some(var) = Var::lookup(&name) {
                    self.advance()?;
                    Ok(Expr::Var(var))
                } else {
                    Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        expected: alloc::vec!["variable", "function"],
                    })
                }
            }
            _ => Err(self.unexpected(EXPRESSION)),
        }
    }
}

/// Parses `text` into an expression tree.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}
