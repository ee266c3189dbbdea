//! A small expression language for test functions, chart maps and bumps.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-"? power
//! power  := atom ("^" INT)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! Variables are `x0 … x{n-1}`; functions are `exp sin cos ln sqrt`. `^` binds
//! tighter than unary minus, so `-x0^2` is `-(x0^2)`.

use std::fmt;

use thiserror::Error;

use crate::taylor::{Elementary, TaylorError, TaylorValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownName { name: String, offset: usize },
    #[error("variable x{index} at byte {offset} is out of range for dimension {dim}")]
    VariableOutOfRange {
        index: usize,
        dim: usize,
        offset: usize,
    },
    #[error("{name} at byte {offset} takes exactly one argument")]
    Arity { name: String, offset: usize },
    #[error("point has dimension {got}, expression expects {expected}")]
    PointDimension { got: usize, expected: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

impl From<TaylorError> for ExprError {
    fn from(e: TaylorError) -> Self {
        ExprError::Domain(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Elementary, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Int(u32),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b',' => out.push((Tok::Comma, start)),
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
                let text = &src[start..i];
                let tok = if text.bytes().all(|b| b.is_ascii_digit()) {
                    match text.parse::<u32>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => Tok::Num(parse_number(text, start)?),
                    }
                } else {
                    Tok::Num(parse_number(text, start)?)
                };
                out.push((tok, start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character {:?}", src[start..].chars().next().unwrap()),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

fn parse_number(text: &str, offset: usize) -> Result<f64, ExprError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ExprError::Syntax {
            offset,
            message: format!("invalid number {text:?}"),
        }),
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dim: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.src.len())
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
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

    fn term(&mut self) -> Result<Expr, ExprError> {
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

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.power()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            return match self.bump() {
                Some(Tok::Int(e)) => Ok(Expr::Pow(Box::new(base), e)),
                _ => {
                    self.pos -= 1;
                    self.syntax("exponent must be a non-negative integer literal")
                }
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Int(v)) => Ok(Expr::Num(f64::from(v))),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => self.ident(name, offset),
            Some(_) => {
                self.pos -= 1;
                self.syntax("expected a number, variable, function call or '('")
            }
            None => self.syntax("unexpected end of input"),
        }
    }

    fn ident(&mut self, name: String, offset: usize) -> Result<Expr, ExprError> {
        if let Some(func) = Elementary::from_name(&name) {
            if self.peek() != Some(&Tok::LParen) {
                return self.syntax(format!("expected '(' after {name}"));
            }
            self.bump();
            if self.peek() == Some(&Tok::RParen) {
                return Err(ExprError::Arity { name, offset });
            }
            let arg = self.expr()?;
            if self.peek() != Some(&Tok::RParen) {
                return Err(ExprError::Arity { name, offset });
            }
            self.bump();
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| ExprError::UnknownName {
                    name: name.clone(),
                    offset,
                })?;
                if index >= self.dim {
                    return Err(ExprError::VariableOutOfRange {
                        index,
                        dim: self.dim,
                        offset,
                    });
                }
                return Ok(Expr::Var(index));
            }
        }
        Err(ExprError::UnknownName { name, offset })
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.bump();
                Ok(())
            }
            _ => self.syntax("expected ')'"),
        }
    }
}

/// Operations an expression can be evaluated over.
trait Domain {
    type V;
    fn lit(&self, c: f64) -> Self::V;
    fn var(&self, i: usize) -> Self::V;
    fn neg(&self, a: Self::V) -> Self::V;
    fn add(&self, a: Self::V, b: Self::V) -> Self::V;
    fn sub(&self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&self, a: Self::V, b: Self::V) -> Self::V;
    fn div(&self, a: Self::V, b: Self::V) -> Result<Self::V, ExprError>;
    fn powi(&self, a: Self::V, e: u32) -> Self::V;
    fn call(&self, f: Elementary, a: Self::V) -> Result<Self::V, ExprError>;
}

struct RealDomain<'a>(&'a [f64]);

impl Domain for RealDomain<'_> {
    type V = f64;
    fn lit(&self, c: f64) -> f64 {
        c
    }
    fn var(&self, i: usize) -> f64 {
        self.0[i]
    }
    fn neg(&self, a: f64) -> f64 {
        -a
    }
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn div(&self, a: f64, b: f64) -> Result<f64, ExprError> {
        if b == 0.0 {
            return Err(ExprError::Domain("division by zero".into()));
        }
        Ok(a / b)
    }
    fn powi(&self, a: f64, e: u32) -> f64 {
        // same multiplication sequence as the series power, so constant terms agree bitwise
        let mut result = 1.0;
        let mut base = a;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result *= base;
            }
            e >>= 1;
            if e > 0 {
                base *= base;
            }
        }
        result
    }
    fn call(&self, f: Elementary, a: f64) -> Result<f64, ExprError> {
        Ok(f.eval(a)?)
    }
}

struct SeriesDomain {
    seeds: Vec<TaylorValue>,
}

impl Domain for SeriesDomain {
    type V = TaylorValue;
    fn lit(&self, c: f64) -> TaylorValue {
        self.seeds[0].constant_like(c)
    }
    fn var(&self, i: usize) -> TaylorValue {
        self.seeds[i].clone()
    }
    fn neg(&self, a: TaylorValue) -> TaylorValue {
        -&a
    }
    fn add(&self, a: TaylorValue, b: TaylorValue) -> TaylorValue {
        &a + &b
    }
    fn sub(&self, a: TaylorValue, b: TaylorValue) -> TaylorValue {
        &a - &b
    }
    fn mul(&self, a: TaylorValue, b: TaylorValue) -> TaylorValue {
        &a * &b
    }
    fn div(&self, a: TaylorValue, b: TaylorValue) -> Result<TaylorValue, ExprError> {
        a.div(&b)
            .map_err(|_| ExprError::Domain("division by zero".into()))
    }
    fn powi(&self, a: TaylorValue, e: u32) -> TaylorValue {
        a.powi(e)
    }
    fn call(&self, f: Elementary, a: TaylorValue) -> Result<TaylorValue, ExprError> {
        Ok(a.elementary(f)?)
    }
}

impl Expr {
    /// Parses `src` as an expression in the variables `x0 … x{dim-1}`.
    pub fn parse(src: &str, dim: usize) -> Result<Expr, ExprError> {
        let toks = lex(src)?;
        let mut p = Parser {
            toks,
            pos: 0,
            dim,
            src,
        };
        let e = p.expr()?;
        if p.pos < p.toks.len() {
            return p.syntax("unexpected trailing input");
        }
        Ok(e)
    }

    fn eval_in<D: Domain>(&self, d: &D) -> Result<D::V, ExprError> {
        Ok(match self {
            Expr::Num(c) => d.lit(*c),
            Expr::Var(i) => d.var(*i),
            Expr::Neg(a) => d.neg(a.eval_in(d)?),
            Expr::Add(a, b) => d.add(a.eval_in(d)?, b.eval_in(d)?),
            Expr::Sub(a, b) => d.sub(a.eval_in(d)?, b.eval_in(d)?),
            Expr::Mul(a, b) => d.mul(a.eval_in(d)?, b.eval_in(d)?),
            Expr::Div(a, b) => d.div(a.eval_in(d)?, b.eval_in(d)?)?,
            Expr::Pow(a, e) => d.powi(a.eval_in(d)?, *e),
            Expr::Call(f, a) => d.call(*f, a.eval_in(d)?)?,
        })
    }

    /// Largest variable index used plus one.
    pub fn min_dim(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.min_dim(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.min_dim().max(b.min_dim())
            }
        }
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<f64, ExprError> {
        if x.len() < self.min_dim() {
            return Err(ExprError::PointDimension {
                got: x.len(),
                expected: self.min_dim(),
            });
        }
        let v = self.eval_in(&RealDomain(x))?;
        if !v.is_finite() {
            return Err(ExprError::Domain(format!("non-finite result at {x:?}")));
        }
        Ok(v)
    }

    /// Order-`k` Taylor expansion at `x0` in `x0.len()` variables.
    pub fn eval_taylor(&self, x0: &[f64], k: u32) -> Result<TaylorValue, ExprError> {
        if x0.is_empty() || x0.len() < self.min_dim() {
            return Err(ExprError::PointDimension {
                got: x0.len(),
                expected: self.min_dim().max(1),
            });
        }
        let d = SeriesDomain {
            seeds: TaylorValue::seed_point(x0, k),
        };
        self.eval_series(&d)
    }

    /// Evaluates with every variable `xᵢ` replaced by the series `inputs[i]`.
    pub fn eval_series_at(&self, inputs: &[TaylorValue]) -> Result<TaylorValue, ExprError> {
        if inputs.is_empty() || inputs.len() < self.min_dim() {
            return Err(ExprError::PointDimension {
                got: inputs.len(),
                expected: self.min_dim().max(1),
            });
        }
        self.eval_series(&SeriesDomain {
            seeds: inputs.to_vec(),
        })
    }

    fn eval_series(&self, d: &SeriesDomain) -> Result<TaylorValue, ExprError> {
        let v = self.eval_in(d)?;
        if v.coefficients().iter().any(|c| !c.is_finite()) {
            return Err(ExprError::Domain("non-finite Taylor coefficient".into()));
        }
        Ok(v)
    }

    /// Replaces each `xᵢ` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Num(c) => Expr::Num(*c),
            Expr::Var(i) => subs[*i].clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(subs))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.substitute(subs)), Box::new(b.substitute(subs))),
            Expr::Pow(a, e) => Expr::Pow(Box::new(a.substitute(subs)), *e),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(subs))),
        }
    }

    fn is_atomic(&self) -> bool {
        matches!(self, Expr::Var(_) | Expr::Call(..))
            || matches!(self, Expr::Num(c) if *c >= 0.0)
    }
}

/// Pretty-printing is fully parenthesized and re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c >= 0.0 => write!(f, "{c}"),
            Expr::Num(c) => write!(f, "(-{})", -c),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(a) => match **a {
                Expr::Pow(..) => write!(f, "(-{a})"),
                _ if a.is_atomic() => write!(f, "(-{a})"),
                _ => write!(f, "(-({a}))"),
            },
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, e) => {
                if a.is_atomic() || matches!(**a, Expr::Add(..) | Expr::Sub(..) | Expr::Mul(..) | Expr::Div(..) | Expr::Neg(_)) {
                    write!(f, "{a}^{e}")
                } else {
                    write!(f, "({a})^{e}")
                }
            }
            Expr::Call(func, a) => match **a {
                Expr::Add(..) | Expr::Sub(..) | Expr::Mul(..) | Expr::Div(..) => {
                    write!(f, "{}{a}", func.name())
                }
                _ => write!(f, "{}({a})", func.name()),
            },
        }
    }
}

/// A vector-valued map `ℝⁿ → ℝᵐ` given componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorExpr {
    dim: usize,
    components: Vec<Expr>,
}

impl VectorExpr {
    pub fn parse<S: AsRef<str>>(srcs: &[S], dim: usize) -> Result<VectorExpr, ExprError> {
        if srcs.is_empty() {
            return Err(ExprError::Syntax {
                offset: 0,
                message: "a vector expression needs at least one component".into(),
            });
        }
        let components = srcs
            .iter()
            .map(|s| Expr::parse(s.as_ref(), dim))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VectorExpr { dim, components })
    }

    pub fn from_components(dim: usize, components: Vec<Expr>) -> VectorExpr {
        assert!(!components.is_empty());
        assert!(components.iter().all(|c| c.min_dim() <= dim));
        VectorExpr { dim, components }
    }

    /// The identity map on `ℝⁿ`.
    pub fn identity(dim: usize) -> VectorExpr {
        VectorExpr {
            dim,
            components: (0..dim).map(Expr::Var).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ExprError> {
        if x.len() != self.dim {
            return Err(ExprError::PointDimension {
                got: x.len(),
                expected: self.dim,
            });
        }
        Ok(())
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.check_point(x)?;
        self.components.iter().map(|c| c.eval_real(x)).collect()
    }

    pub fn eval_taylor(&self, x0: &[f64], k: u32) -> Result<Vec<TaylorValue>, ExprError> {
        self.check_point(x0)?;
        let d = SeriesDomain {
            seeds: TaylorValue::seed_point(x0, k),
        };
        self.components.iter().map(|c| c.eval_series(&d)).collect()
    }

    pub fn eval_series_at(&self, inputs: &[TaylorValue]) -> Result<Vec<TaylorValue>, ExprError> {
        if inputs.len() != self.dim {
            return Err(ExprError::PointDimension {
                got: inputs.len(),
                expected: self.dim,
            });
        }
        self.components
            .iter()
            .map(|c| c.eval_series_at(inputs))
            .collect()
    }

    /// `self ∘ inner`, built by substitution.
    pub fn compose(&self, inner: &VectorExpr) -> VectorExpr {
        assert_eq!(inner.output_dim(), self.dim, "composition arity mismatch");
        VectorExpr {
            dim: inner.dim,
            components: self
                .components
                .iter()
                .map(|c| c.substitute(&inner.components))
                .collect(),
        }
    }
}
