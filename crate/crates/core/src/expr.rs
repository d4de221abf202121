//! Scalar expression language for metric entries, potentials and profiles.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom { "^" int } ;
//! int     = [ "-" | "+" ] digit { digit } ;
//! atom    = number | ident | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "sinh" | "cosh" | "sqrt" | "log" ;
//! ident   = coordinate | parameter | "pi" ;
//! ```

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::jet::{Elementary, Jet, JetError, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sinh,
    Cosh,
    Sqrt,
    Log,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }

    fn elementary(self) -> Elementary {
        match self {
            Func::Sin => Elementary::Sin,
            Func::Cos => Elementary::Cos,
            Func::Exp => Elementary::Exp,
            Func::Sinh => Elementary::Sinh,
            Func::Cosh => Elementary::Cosh,
            Func::Sqrt => Elementary::Sqrt,
            Func::Log => Elementary::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    /// Coordinate by position.
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    NonIntegerExponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} at byte {offset}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn describe(k: &ParseErrorKind) -> String {
    match k {
        ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ParseErrorKind::UnknownIdentifier(n) => format!("unknown identifier '{n}'"),
        ParseErrorKind::NonIntegerExponent => "exponent must be an integer literal".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("parameter '{0}' is unbound")]
    UnboundParameter(String),
    #[error("expected {expected} coordinates, got {got}")]
    PointLength { expected: usize, got: usize },
    #[error("{func} is undefined at {at}")]
    Domain { func: &'static str, at: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Names an expression may refer to.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub coords: Vec<String>,
    pub params: Vec<String>,
}

impl Scope {
    pub fn new<S: AsRef<str>>(coords: &[S], params: &[S]) -> Scope {
        Scope {
            coords: coords.iter().map(|s| s.as_ref().to_string()).collect(),
            params: params.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    /// `x0 .. x{n-1}` with no parameters.
    pub fn indexed(n: usize) -> Scope {
        Scope {
            coords: (0..n).map(|i| format!("x{i}")).collect(),
            params: Vec::new(),
        }
    }
}

pub type Params = BTreeMap<String, f64>;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, kind: ParseErrorKind, offset: usize) -> Result<T, ParseError> {
        Err(ParseError { kind, offset })
    }

    fn syntax<T>(&self, msg: &str) -> Result<T, ParseError> {
        self.err(ParseErrorKind::Syntax(msg.to_string()), self.pos)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.eat(b'^') {
            let k = self.exponent()?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return self.err(ParseErrorKind::NonIntegerExponent, start);
        }
        if matches!(self.src.get(self.pos), Some(b'.' | b'e' | b'E')) {
            return self.err(ParseErrorKind::NonIntegerExponent, start);
        }
        let text = std::str::from_utf8(&self.src[digits_start..self.pos]).expect("ascii");
        let v: i32 = text.parse().map_err(|_| ParseError {
            kind: ParseErrorKind::Syntax("exponent too large".into()),
            offset: start,
        })?;
        Ok(if neg { -v } else { v })
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii");
        let v: f64 = text.parse().map_err(|_| ParseError {
            kind: ParseErrorKind::Syntax(format!("bad number '{text}'")),
            offset: start,
        })?;
        self.pos = i;
        Ok(Expr::Num(v))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => self.syntax("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.syntax("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if let Some(i) = self.scope.coords.iter().position(|c| c == name) {
                    return Ok(Expr::Var(i));
                }
                if self.scope.params.iter().any(|p| p == name) {
                    return Ok(Expr::Param(name.to_string()));
                }
                if let Some(f) = Func::from_name(name) {
                    if !self.eat(b'(') {
                        return self.syntax(&format!("expected '(' after {name}"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return self.syntax("expected ')'");
                    }
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                self.err(ParseErrorKind::UnknownIdentifier(name.to_string()), start)
            }
            Some(c) => self.syntax(&format!("unexpected character '{}'", c as char)),
        }
    }
}

/// Parse `text` against the declared coordinates and parameters.
pub fn parse(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    if let Some(i) = text.bytes().position(|b| !b.is_ascii()) {
        return Err(ParseError {
            kind: ParseErrorKind::Syntax("non-ASCII character".into()),
            offset: i,
        });
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        scope,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.syntax("trailing input");
    }
    Ok(e)
}

fn domain_check(f: Func, x: f64) -> Result<(), EvalError> {
    let bad = match f {
        Func::Sqrt => x < 0.0,
        Func::Log => x <= 0.0,
        _ => false,
    };
    if bad {
        Err(EvalError::Domain { func: f.name(), at: x })
    } else {
        Ok(())
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    /// Numeric value at `point`.
    pub fn eval(&self, point: &[f64], params: &Params) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(i) => *point.get(*i).ok_or(EvalError::PointLength {
                expected: i + 1,
                got: point.len(),
            })?,
            Expr::Param(n) => *params.get(n).ok_or_else(|| EvalError::UnboundParameter(n.clone()))?,
            Expr::Neg(a) => -a.eval(point, params)?,
            Expr::Call(f, a) => {
                let x = a.eval(point, params)?;
                domain_check(*f, x)?;
                f.elementary().eval(x)
            }
            Expr::Bin(op, a, b) => {
                let x = a.eval(point, params)?;
                let y = b.eval(point, params)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, k) => {
                let x = a.eval(point, params)?;
                if *k < 0 && x == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                x.powi(*k)
            }
        })
    }

    /// Jet of the expression at `point`.
    pub fn eval_jet(&self, point: &[f64], params: &Params, shape: Shape) -> Result<Jet, EvalError> {
        if point.len() != shape.dim() {
            return Err(EvalError::PointLength {
                expected: shape.dim(),
                got: point.len(),
            });
        }
        self.jet_rec(point, params, shape)
    }

    fn jet_rec(&self, point: &[f64], params: &Params, shape: Shape) -> Result<Jet, EvalError> {
        Ok(match self {
            Expr::Num(v) => shape.constant(*v),
            Expr::Pi => shape.constant(std::f64::consts::PI),
            Expr::Var(i) => {
                let v = *point.get(*i).ok_or(EvalError::PointLength {
                    expected: i + 1,
                    got: point.len(),
                })?;
                shape.variable(*i, v)?
            }
            Expr::Param(n) => shape.constant(*params.get(n).ok_or_else(|| EvalError::UnboundParameter(n.clone()))?),
            Expr::Neg(a) => -a.jet_rec(point, params, shape)?,
            Expr::Call(f, a) => {
                let j = a.jet_rec(point, params, shape)?;
                domain_check(*f, j.value())?;
                j.apply(f.elementary())?
            }
            Expr::Bin(op, a, b) => {
                let x = a.jet_rec(point, params, shape)?;
                let y = b.jet_rec(point, params, shape)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x.checked_div(&y).map_err(|e| match e {
                        JetError::ZeroDivisor => EvalError::DivisionByZero,
                        e => e.into(),
                    })?,
                }
            }
            Expr::Pow(a, k) => {
                let j = a.jet_rec(point, params, shape)?;
                j.powi(*k).map_err(|e| match e {
                    JetError::ZeroDivisor => EvalError::DivisionByZero,
                    e => e.into(),
                })?
            }
        })
    }

    /// Replace bound parameters by literals.
    pub fn bind(&self, params: &Params) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Param(n) => params.get(n).map(|v| Expr::Num(*v)),
            _ => None,
        })
    }

    /// Renumber coordinates `i → i + offset`.
    pub fn shift_vars(&self, offset: usize) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Var(i) => Some(Expr::Var(i + offset)),
            _ => None,
        })
    }

    /// Substitute coordinate `i` by `subs[i]`.
    pub fn substitute_vars(&self, subs: &[Expr]) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Var(i) => subs.get(*i).cloned(),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        if let Some(e) = f(self) {
            return e;
        }
        match self {
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_leaves(f))),
            Expr::Call(g, a) => Expr::Call(*g, Box::new(a.map_leaves(f))),
            Expr::Bin(op, a, b) => Expr::Bin(*op, Box::new(a.map_leaves(f)), Box::new(b.map_leaves(f))),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.map_leaves(f)), *k),
            leaf => leaf.clone(),
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Bin(_, a, b) => a.max_var().max(b.max_var()),
            _ => None,
        }
    }

    /// Parameters referenced, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Param(n) => out.push(n.clone()),
                Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => walk(a, out),
                Expr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        let mut v = Vec::new();
        walk(self, &mut v);
        v.sort();
        v.dedup();
        v
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Fully parenthesized rendering using `names` for coordinates.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Shown { e: self, names }
    }
}

struct Shown<'a> {
    e: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.e, Some(self.names), f)
    }
}

fn write_expr(e: &Expr, names: Option<&[String]>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let sub = |x: &Expr, f: &mut fmt::Formatter<'_>| write_expr(x, names, f);
    match e {
        Expr::Num(v) => {
            if v.is_sign_negative() {
                write!(f, "(-{:?})", -v)
            } else {
                write!(f, "{v:?}")
            }
        }
        Expr::Pi => write!(f, "pi"),
        Expr::Var(i) => match names.and_then(|n| n.get(*i)) {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "x{i}"),
        },
        Expr::Param(n) => write!(f, "{n}"),
        Expr::Neg(a) => {
            write!(f, "(-")?;
            sub(a, f)?;
            write!(f, ")")
        }
        Expr::Call(g, a) => {
            write!(f, "{}(", g.name())?;
            sub(a, f)?;
            write!(f, ")")
        }
        Expr::Bin(op, a, b) => {
            let s = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
            };
            write!(f, "(")?;
            sub(a, f)?;
            write!(f, " {s} ")?;
            sub(b, f)?;
            write!(f, ")")
        }
        Expr::Pow(a, k) => {
            write!(f, "(")?;
            sub(a, f)?;
            write!(f, "^{k})")
        }
    }
}

/// Renders coordinates as `x0, x1, …`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, None, f)
    }
}
