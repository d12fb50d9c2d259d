//! Arithmetic expressions: parsing, symbolic differentiation and evaluation.
//!
//! Warping functions, conformal fiber factors, boundary data and radial
//! comparison functions are all entered as expressions of this small grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' number)?
//! base   := number | identifier | function '(' expr ')' | '(' expr ')' | '-' factor
//! ```
//!
//! Exponents are numeric constants, so every derivative stays inside the grammar.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 9] =
        [Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Tan, Func::Sinh, Func::Cosh, Func::Tanh, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply<T: Scalar>(self, x: T) -> Result<T, EvalError> {
        let y = match self {
            Func::Exp => x.exp(),
            Func::Log => {
                if !(x > T::zero()) {
                    return Err(EvalError::domain("log", x));
                }
                x.ln()
            }
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => {
                if x < T::zero() {
                    return Err(EvalError::domain("sqrt", x));
                }
                x.sqrt()
            }
        };
        finite(self.name(), x, y)
    }
}

/// Expression tree. Values are immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnbalancedParen,
    UnknownIdentifier(String),
    NonConstantExponent,
    BadNumber(String),
}

impl fmt::Display for SyntaxErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxErrorKind::Empty => write!(f, "empty expression"),
            SyntaxErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            SyntaxErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            SyntaxErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            SyntaxErrorKind::UnbalancedParen => write!(f, "unbalanced parentheses"),
            SyntaxErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            SyntaxErrorKind::NonConstantExponent => write!(f, "exponent must be a numeric constant"),
            SyntaxErrorKind::BadNumber(s) => write!(f, "malformed number `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct SyntaxError {
    pub offset: usize,
    pub kind: SyntaxErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at {arg}")]
    Domain { op: &'static str, arg: f64 },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

impl EvalError {
    fn domain<T: Scalar>(op: &'static str, arg: T) -> Self {
        EvalError::Domain { op, arg: arg.as_f64() }
    }
}

fn finite<T: Scalar>(op: &'static str, arg: T, y: T) -> Result<T, EvalError> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(EvalError::domain(op, arg))
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Num(x) => format!("{x}"),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '0'..='9' | '.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[i..j];
                let v: f64 = text
                    .parse()
                    .map_err(|_| SyntaxError { offset: start, kind: SyntaxErrorKind::BadNumber(text.to_string()) })?;
                out.push((start, Tok::Num(v)));
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((start, Tok::Ident(src[i..j].to_string())));
                i = j;
                continue;
            }
            other => return Err(SyntaxError { offset: start, kind: SyntaxErrorKind::UnexpectedChar(other) }),
        };
        out.push((start, tok));
        i += c.len_utf8();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    vars: Option<&'a [&'a str]>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err(&self, kind: SyntaxErrorKind) -> SyntaxError {
        SyntaxError { offset: self.offset(), kind }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let p = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    fn signed_number(&mut self) -> Option<f64> {
        let save = self.pos;
        let sign = match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                -1.0
            }
            Some(Tok::Plus) => {
                self.bump();
                1.0
            }
            _ => 1.0,
        };
        match self.peek() {
            Some(Tok::Num(x)) => {
                let x = *x;
                self.bump();
                Some(sign * x)
            }
            _ => {
                self.pos = save;
                None
            }
        }
    }

    fn exponent(&mut self) -> Result<f64, SyntaxError> {
        if let Some(p) = self.signed_number() {
            return Ok(p);
        }
        if self.peek() == Some(&Tok::LParen) {
            let save = self.pos;
            self.bump();
            if let Some(p) = self.signed_number() {
                if self.peek() == Some(&Tok::RParen) {
                    self.bump();
                    return Ok(p);
                }
            }
            self.pos = save;
        }
        if self.peek().is_none() {
            return Err(self.err(SyntaxErrorKind::UnexpectedEnd));
        }
        Err(self.err(SyntaxErrorKind::NonConstantExponent))
    }

    fn base(&mut self) -> Result<Expr, SyntaxError> {
        let at = self.offset();
        match self.bump() {
            None => Err(SyntaxError { offset: at, kind: SyntaxErrorKind::UnexpectedEnd }),
            Some(Tok::Num(x)) => Ok(Expr::Const(x)),
            Some(Tok::Minus) => Ok(Expr::Neg(Box::new(self.factor()?))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(SyntaxError { offset: at, kind: SyntaxErrorKind::UnbalancedParen }),
                }
            }
            Some(Tok::Ident(name)) => {
                if let Some(func) = Func::from_name(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return Err(SyntaxError { offset: at, kind: SyntaxErrorKind::UnknownIdentifier(name) });
                    }
                    let open = self.offset();
                    self.bump();
                    let arg = self.expr()?;
                    match self.bump() {
                        Some(Tok::RParen) => Ok(Expr::Func(func, Box::new(arg))),
                        _ => Err(SyntaxError { offset: open, kind: SyntaxErrorKind::UnbalancedParen }),
                    }
                } else if name == "pi" {
                    Ok(Expr::Const(std::f64::consts::PI))
                } else {
                    match self.vars {
                        Some(allowed) if !allowed.contains(&name.as_str()) => {
                            Err(SyntaxError { offset: at, kind: SyntaxErrorKind::UnknownIdentifier(name) })
                        }
                        _ => Ok(Expr::Var(name)),
                    }
                }
            }
            Some(Tok::RParen) => Err(SyntaxError { offset: at, kind: SyntaxErrorKind::UnbalancedParen }),
            Some(t) => Err(SyntaxError { offset: at, kind: SyntaxErrorKind::UnexpectedToken(t.text()) }),
        }
    }
}

fn parse_impl(src: &str, vars: Option<&[&str]>) -> Result<Expr, SyntaxError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(SyntaxError { offset: 0, kind: SyntaxErrorKind::Empty });
    }
    let mut p = Parser { toks, pos: 0, end: src.len(), vars };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(Tok::RParen) => Err(p.err(SyntaxErrorKind::UnbalancedParen)),
        Some(t) => Err(p.err(SyntaxErrorKind::UnexpectedToken(t.text()))),
    }
}

// ---------------------------------------------------------------------------
// Folding constructors

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn konst(x: f64) -> Expr {
    Expr::Const(clean(x))
}

impl Expr {
    pub fn constant(x: f64) -> Expr {
        konst(x)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => konst(-c),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => konst(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => konst(x - y),
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => konst(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => konst(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => konst(x / y),
            (Some(x), _) if x == 0.0 => konst(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, p: f64) -> Expr {
        if p == 0.0 {
            return konst(1.0);
        }
        if p == 1.0 {
            return a;
        }
        if let Some(x) = a.as_const() {
            let y = x.powf(p);
            if y.is_finite() {
                return konst(y);
            }
        }
        Expr::Pow(Box::new(a), clean(p))
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        if let Some(x) = a.as_const() {
            if let Ok(y) = f.apply(x) {
                return konst(y);
            }
        }
        Expr::Func(f, Box::new(a))
    }
}

// ---------------------------------------------------------------------------
// Public operations

impl Expr {
    /// Parses with every non-function identifier accepted as a variable.
    pub fn parse(src: &str) -> Result<Expr, SyntaxError> {
        parse_impl(src, None)
    }

    /// Parses, rejecting identifiers outside `vars` (and the constant `pi`).
    pub fn parse_in(src: &str, vars: &[&str]) -> Result<Expr, SyntaxError> {
        parse_impl(src, Some(vars))
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Func(_, a) | Expr::Pow(a, _) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Exact symbolic derivative with constant folding.
    pub fn derivative(&self, var: &str) -> Expr {
        use Expr::*;
        match self {
            Const(_) => konst(0.0),
            Var(v) => konst(if v == var { 1.0 } else { 0.0 }),
            Neg(a) => Expr::neg(a.derivative(var)),
            Add(a, b) => Expr::add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => Expr::sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => {
                Expr::add(Expr::mul(a.derivative(var), (**b).clone()), Expr::mul((**a).clone(), b.derivative(var)))
            }
            Div(a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                if db.is_const(0.0) {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                        Expr::pow((**b).clone(), 2.0),
                    )
                }
            }
            Pow(a, p) => Expr::mul(Expr::mul(konst(*p), Expr::pow((**a).clone(), p - 1.0)), a.derivative(var)),
            Func(f, a) => {
                let da = a.derivative(var);
                if da.is_const(0.0) {
                    return konst(0.0);
                }
                let a = (**a).clone();
                let outer = match f {
                    self::Func::Exp => Expr::func(self::Func::Exp, a),
                    self::Func::Log => return Expr::div(da, a),
                    self::Func::Sin => Expr::func(self::Func::Cos, a),
                    self::Func::Cos => Expr::neg(Expr::func(self::Func::Sin, a)),
                    self::Func::Tan => return Expr::div(da, Expr::pow(Expr::func(self::Func::Cos, a), 2.0)),
                    self::Func::Sinh => Expr::func(self::Func::Cosh, a),
                    self::Func::Cosh => Expr::func(self::Func::Sinh, a),
                    self::Func::Tanh => Expr::sub(konst(1.0), Expr::pow(Expr::func(self::Func::Tanh, a), 2.0)),
                    self::Func::Sqrt => return Expr::div(da, Expr::mul(konst(2.0), Expr::func(self::Func::Sqrt, a))),
                };
                Expr::mul(outer, da)
            }
        }
    }

    pub fn nth_derivative(&self, var: &str, order: usize) -> Expr {
        (0..order).fold(self.clone(), |e, _| e.derivative(var))
    }

    /// Tree-walking evaluation against a name lookup.
    pub fn eval_with<T: Scalar>(&self, lookup: &dyn Fn(&str) -> Option<T>) -> Result<T, EvalError> {
        use Expr::*;
        Ok(match self {
            Const(c) => T::lit(*c),
            Var(v) => lookup(v).ok_or_else(|| EvalError::UnboundVariable(v.clone()))?,
            Neg(a) => -a.eval_with(lookup)?,
            Func(f, a) => f.apply(a.eval_with(lookup)?)?,
            Add(a, b) => {
                let (x, y) = (a.eval_with(lookup)?, b.eval_with(lookup)?);
                finite("+", x, x + y)?
            }
            Sub(a, b) => {
                let (x, y) = (a.eval_with(lookup)?, b.eval_with(lookup)?);
                finite("-", x, x - y)?
            }
            Mul(a, b) => {
                let (x, y) = (a.eval_with(lookup)?, b.eval_with(lookup)?);
                finite("*", x, x * y)?
            }
            Div(a, b) => {
                let (x, y) = (a.eval_with(lookup)?, b.eval_with(lookup)?);
                if y == T::zero() {
                    return Err(EvalError::domain("division", y));
                }
                finite("/", x, x / y)?
            }
            Pow(a, p) => power(a.eval_with(lookup)?, *p)?,
        })
    }

    pub fn eval<T: Scalar>(&self, bindings: &HashMap<String, T>) -> Result<T, EvalError> {
        self.eval_with(&|name: &str| bindings.get(name).copied())
    }

    /// Resolves variables to argument slots for repeated evaluation.
    pub fn compile(&self, vars: &[&str]) -> Result<Compiled, EvalError> {
        let mut ops = Vec::new();
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        self.emit(vars, &mut ops, &mut depth, &mut max_depth)?;
        Ok(Compiled { ops, arity: vars.len(), max_depth })
    }

    fn emit(
        &self,
        vars: &[&str],
        ops: &mut Vec<Op>,
        depth: &mut usize,
        max_depth: &mut usize,
    ) -> Result<(), EvalError> {
        use Expr::*;
        let mut push = |ops: &mut Vec<Op>, op: Op, depth: &mut usize| {
            ops.push(op);
            *depth += 1;
            *max_depth = (*max_depth).max(*depth);
        };
        match self {
            Const(c) => push(ops, Op::Const(*c), depth),
            Var(v) => {
                let slot = vars.iter().position(|n| n == v).ok_or_else(|| EvalError::UnboundVariable(v.clone()))?;
                push(ops, Op::Var(slot), depth)
            }
            Neg(a) => {
                a.emit(vars, ops, depth, max_depth)?;
                ops.push(Op::Neg);
            }
            Func(f, a) => {
                a.emit(vars, ops, depth, max_depth)?;
                ops.push(Op::Func(*f));
            }
            Pow(a, p) => {
                a.emit(vars, ops, depth, max_depth)?;
                ops.push(Op::Pow(*p));
            }
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                a.emit(vars, ops, depth, max_depth)?;
                b.emit(vars, ops, depth, max_depth)?;
                ops.push(match self {
                    Add(..) => Op::Add,
                    Sub(..) => Op::Sub,
                    Mul(..) => Op::Mul,
                    _ => Op::Div,
                });
                *depth -= 1;
            }
        }
        Ok(())
    }
}

fn power<T: Scalar>(x: T, p: f64) -> Result<T, EvalError> {
    let is_int = p.fract() == 0.0;
    if x < T::zero() && !is_int {
        return Err(EvalError::domain("^", x));
    }
    if x == T::zero() && p < 0.0 {
        return Err(EvalError::domain("^", x));
    }
    let y = if is_int && p.abs() <= i32::MAX as f64 { x.powi(p as i32) } else { x.powf(T::lit(p)) };
    finite("^", x, y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Func(Func),
    Add,
    Sub,
    Mul,
    Div,
    Pow(f64),
}

/// Postfix program with variables bound to positional slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    ops: Vec<Op>,
    arity: usize,
    max_depth: usize,
}

impl Compiled {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval<T: Scalar>(&self, args: &[T]) -> Result<T, EvalError> {
        debug_assert!(args.len() >= self.arity);
        let mut stack: Vec<T> = Vec::with_capacity(self.max_depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(T::lit(c)),
                Op::Var(i) => stack.push(args[i]),
                Op::Neg => {
                    let x = stack.pop().unwrap();
                    stack.push(-x);
                }
                Op::Func(f) => {
                    let x = stack.pop().unwrap();
                    stack.push(f.apply(x)?);
                }
                Op::Pow(p) => {
                    let x = stack.pop().unwrap();
                    stack.push(power(x, p)?);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let y = stack.pop().unwrap();
                    let x = stack.pop().unwrap();
                    let r = match op {
                        Op::Add => finite("+", x, x + y)?,
                        Op::Sub => finite("-", x, x - y)?,
                        Op::Mul => finite("*", x, x * y)?,
                        _ => {
                            if y == T::zero() {
                                return Err(EvalError::domain("division", y));
                            }
                            finite("/", x, x / y)?
                        }
                    };
                    stack.push(r);
                }
            }
        }
        Ok(stack.pop().expect("non-empty program"))
    }
}

// ---------------------------------------------------------------------------
// Canonical printer

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn fmt_num(x: f64) -> String {
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Const(c) if *c < 0.0 => PREC_NEG,
            Expr::Const(_) | Expr::Var(_) | Expr::Func(..) => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Add(..) | Expr::Sub(..) => PREC_ADD,
            Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
            Expr::Pow(..) => PREC_POW,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => write!(f, "{}", fmt_num(*c)),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, PREC_NEG)
            }
            Expr::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_at(f, PREC_ADD)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write_at(f, PREC_MUL)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_at(f, PREC_MUL)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write_at(f, PREC_NEG)
            }
            Expr::Pow(a, p) => {
                a.write_at(f, PREC_ATOM)?;
                write!(f, "^{}", fmt_num(*p))
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(e: &Expr, var: &str, x: f64) -> f64 {
        e.eval_with(&|n: &str| (n == var).then_some(x)).unwrap()
    }

    #[test]
    fn parses_function_of_variable() {
        let e = Expr::parse("cos(t)").unwrap();
        assert_eq!(e, Expr::Func(Func::Cos, Box::new(Expr::var("t"))));
    }

    #[test]
    fn evaluates_catalog_examples() {
        assert_eq!(at(&Expr::parse("exp(t)").unwrap(), "t", 0.0), 1.0);
        assert_eq!(at(&Expr::parse("cosh(t)").unwrap(), "t", 0.0), 1.0);
        let e = Expr::parse("t^2/(1+t^2)").unwrap();
        assert!((at(&e, "t", 3.0) - 0.9).abs() < 1e-15);
        let e = Expr::parse("4/(1-(x1^2+x2^2))^2").unwrap();
        let v: f64 = e.eval_with(&|n: &str| matches!(n, "x1" | "x2").then_some(0.0)).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn precedence_and_association() {
        assert_eq!(at(&Expr::parse("2 - 3 - 4").unwrap(), "t", 0.0), -5.0);
        assert_eq!(at(&Expr::parse("8 / 4 / 2").unwrap(), "t", 0.0), 1.0);
        assert_eq!(at(&Expr::parse("-t^2").unwrap(), "t", 3.0), -9.0);
        assert_eq!(at(&Expr::parse("2*t^-1").unwrap(), "t", 4.0), 0.5);
        assert_eq!(at(&Expr::parse("t^(0.5)").unwrap(), "t", 4.0), 2.0);
        assert_eq!(at(&Expr::parse("1 \u{2212} t").unwrap(), "t", 4.0), -3.0);
        assert_eq!(at(&Expr::parse("1.5e1 + pi*0").unwrap(), "t", 0.0), 15.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let e = Expr::parse("").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::Empty);
        let e = Expr::parse("  ").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::Empty);
        let e = Expr::parse("cos(t").unwrap_err();
        assert_eq!((e.offset, e.kind), (3, SyntaxErrorKind::UnbalancedParen));
        let e = Expr::parse("(t + 1))").unwrap_err();
        assert_eq!((e.offset, e.kind), (7, SyntaxErrorKind::UnbalancedParen));
        let e = Expr::parse("t^t").unwrap_err();
        assert_eq!((e.offset, e.kind), (2, SyntaxErrorKind::NonConstantExponent));
        let e = Expr::parse_in("cos(s)", &["t"]).unwrap_err();
        assert_eq!((e.offset, e.kind), (4, SyntaxErrorKind::UnknownIdentifier("s".into())));
        let e = Expr::parse("exp + 1").unwrap_err();
        assert_eq!(e.kind, SyntaxErrorKind::UnknownIdentifier("exp".into()));
        let e = Expr::parse("t $ 1").unwrap_err();
        assert_eq!((e.offset, e.kind), (2, SyntaxErrorKind::UnexpectedChar('$')));
        let e = Expr::parse("t +").unwrap_err();
        assert_eq!((e.offset, e.kind), (3, SyntaxErrorKind::UnexpectedEnd));
    }

    #[test]
    fn derivative_table_rules() {
        let e = Expr::parse("cosh(t)").unwrap();
        assert_eq!(e.derivative("t").to_string(), "sinh(t)");
        let d = Expr::parse("exp(t)").unwrap().derivative("t");
        assert!((at(&d, "t", 1.0) - std::f64::consts::E).abs() < 1e-15);
        // (log cos)'' = -sec^2
        let d2 = Expr::parse("log(cos(t))").unwrap().nth_derivative("t", 2);
        assert!((at(&d2, "t", 0.0) + 1.0).abs() < 1e-15);
        // d/dx of a constant in another variable folds to zero
        assert_eq!(Expr::parse("sin(t)*2").unwrap().derivative("x"), Expr::Const(0.0));
    }

    #[test]
    fn negative_zero_folds_to_zero() {
        let e = Expr::neg(Expr::constant(0.0));
        match e {
            Expr::Const(c) => assert!(c.is_sign_positive()),
            _ => panic!("expected constant"),
        }
        assert_eq!(Expr::mul(Expr::constant(-0.0), Expr::var("t")).to_string(), "0");
    }

    #[test]
    fn domain_errors() {
        let e = Expr::parse("log(t)").unwrap();
        assert!(matches!(e.eval_with(&|_| Some(0.0)), Err(EvalError::Domain { op: "log", .. })));
        let e = Expr::parse("sqrt(t)").unwrap();
        assert!(matches!(e.eval_with(&|_| Some(-1.0)), Err(EvalError::Domain { .. })));
        let e = Expr::parse("1/t").unwrap();
        assert!(matches!(e.eval_with(&|_| Some(0.0)), Err(EvalError::Domain { .. })));
        let e = Expr::parse("t + y").unwrap();
        let err = e.eval_with(&|n: &str| (n == "t").then_some(1.0)).unwrap_err();
        assert_eq!(err, EvalError::UnboundVariable("y".into()));
        assert!(e.compile(&["t"]).is_err());
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let e = Expr::parse("sinh(x1)*x2^3 - exp(-x2)/(2 + cos(x1))").unwrap();
        let c = e.compile(&["x1", "x2"]).unwrap();
        for k in 0..20 {
            let (a, b) = (k as f64 * 0.17 - 1.0, 0.3 + k as f64 * 0.05);
            let tree: f64 = e
                .eval_with(&|n: &str| match n {
                    "x1" => Some(a),
                    "x2" => Some(b),
                    _ => None,
                })
                .unwrap();
            assert_eq!(c.eval(&[a, b]).unwrap(), tree);
        }
        let single: f32 = c.eval(&[0.5f32, 1.0]).unwrap();
        assert!((single as f64 - c.eval(&[0.5f64, 1.0]).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn printer_keeps_structure() {
        for src in ["a - (b - c)", "a/(b*c)", "(-t)^2", "-t^2", "2^-1", "(a + b)*c", "t^-1.5"] {
            let e = Expr::parse(src).unwrap();
            let back = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, back, "{src} printed as {e}");
        }
    }
}
