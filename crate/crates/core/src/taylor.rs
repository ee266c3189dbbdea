//! Truncated multivariate Taylor arithmetic.
//!
//! A [`TaylorValue`] of dimension `n` and order `k` stores the coefficients
//! `∂^α f(x₀) / α!` for all `|α| ≤ k`, densely in graded-lex order. Products are
//! truncated convolutions driven by the interned pair table of the
//! [`IndexSpace`]; univariate functions are applied by composing with their
//! Taylor coefficients at the constant term.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use crate::multiindex::{IndexSpace, MultiIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaylorError {
    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("point has dimension {got}, expected {expected}")]
    PointDimension { got: usize, expected: usize },
    #[error("division by a series with zero constant term")]
    ZeroDivisor,
    #[error("{func} is not defined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("derivative order {requested} exceeds truncation order {order}")]
    OrderTooHigh { requested: u32, order: u32 },
    #[error("multi-index {0} has the wrong dimension")]
    IndexDimension(MultiIndex),
}

/// The univariate functions available to series composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Elementary {
    Exp,
    Sin,
    Cos,
    Ln,
    Sqrt,
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Ln => "ln",
            Elementary::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Elementary> {
        Some(match name {
            "exp" => Elementary::Exp,
            "sin" => Elementary::Sin,
            "cos" => Elementary::Cos,
            "ln" => Elementary::Ln,
            "sqrt" => Elementary::Sqrt,
            _ => return None,
        })
    }

    pub fn eval(self, x: f64) -> Result<f64, TaylorError> {
        let domain = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(TaylorError::Domain {
                    func: self.name(),
                    value: x,
                })
            }
        };
        match self {
            Elementary::Exp => Ok(x.exp()),
            Elementary::Sin => Ok(x.sin()),
            Elementary::Cos => Ok(x.cos()),
            Elementary::Ln => domain(x > 0.0).map(|_| x.ln()),
            Elementary::Sqrt => domain(x >= 0.0).map(|_| x.sqrt()),
        }
    }

    /// Taylor coefficients `f^{(r)}(x₀)/r!` for `r = 0..=k`.
    pub fn coefficients(self, x0: f64, k: u32) -> Result<Vec<f64>, TaylorError> {
        let k = k as usize;
        let mut c = Vec::with_capacity(k + 1);
        match self {
            Elementary::Exp => {
                let e = x0.exp();
                let mut fact = 1.0;
                for r in 0..=k {
                    if r > 0 {
                        fact *= r as f64;
                    }
                    c.push(e / fact);
                }
            }
            Elementary::Sin | Elementary::Cos => {
                let (s, co) = x0.sin_cos();
                // derivatives of sin cycle through sin, cos, -sin, -cos
                let cycle = match self {
                    Elementary::Sin => [s, co, -s, -co],
                    _ => [co, -s, -co, s],
                };
                let mut fact = 1.0;
                for r in 0..=k {
                    if r > 0 {
                        fact *= r as f64;
                    }
                    c.push(cycle[r % 4] / fact);
                }
            }
            Elementary::Ln => {
                if x0 <= 0.0 {
                    return Err(TaylorError::Domain {
                        func: "ln",
                        value: x0,
                    });
                }
                c.push(x0.ln());
                for r in 1..=k {
                    let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
                    c.push(sign / (r as f64 * x0.powi(r as i32)));
                }
            }
            Elementary::Sqrt => {
                if x0 <= 0.0 {
                    return Err(TaylorError::Domain {
                        func: "sqrt",
                        value: x0,
                    });
                }
                // generalized binomial series of (x0 + h)^{1/2}
                let mut coef = x0.sqrt();
                c.push(coef);
                for r in 1..=k {
                    coef *= (0.5 - (r as f64 - 1.0)) / (r as f64) / x0;
                    c.push(coef);
                }
            }
        }
        Ok(c)
    }
}

/// A truncated Taylor expansion of order `k` in `n` variables.
#[derive(Clone)]
pub struct TaylorValue {
    space: Arc<IndexSpace>,
    coeffs: Vec<f64>,
}

impl TaylorValue {
    pub fn zero(n: usize, k: u32) -> Self {
        Self::in_space(IndexSpace::get(n, k))
    }

    pub fn in_space(space: Arc<IndexSpace>) -> Self {
        let coeffs = vec![0.0; space.len()];
        TaylorValue { space, coeffs }
    }

    pub fn constant(n: usize, k: u32, c: f64) -> Self {
        let mut v = Self::zero(n, k);
        v.coeffs[0] = c;
        v
    }

    /// A constant in the same index space as `self`.
    pub fn constant_like(&self, c: f64) -> Self {
        let mut v = Self::in_space(Arc::clone(&self.space));
        v.coeffs[0] = c;
        v
    }

    /// The coordinate function `xᵢ` expanded at `x0`.
    pub fn seed_variable(x0: &[f64], i: usize, k: u32) -> Result<Self, TaylorError> {
        let n = x0.len();
        if i >= n {
            return Err(TaylorError::IndexOutOfRange { index: i, dim: n });
        }
        let mut v = Self::constant(n, k, x0[i]);
        if k >= 1 {
            let pos = v.space.position(&MultiIndex::unit(n, i)).unwrap();
            v.coeffs[pos] = 1.0;
        }
        Ok(v)
    }

    /// All coordinate functions expanded at `x0`.
    pub fn seed_point(x0: &[f64], k: u32) -> Vec<Self> {
        (0..x0.len())
            .map(|i| Self::seed_variable(x0, i, k).unwrap())
            .collect()
    }

    /// Builds from raw Taylor-normalized coefficients in graded-lex order.
    pub fn from_coefficients(n: usize, k: u32, coeffs: Vec<f64>) -> Self {
        let space = IndexSpace::get(n, k);
        assert_eq!(coeffs.len(), space.len(), "coefficient count mismatch");
        TaylorValue { space, coeffs }
    }

    /// Builds from derivative values `∂^α f(x₀)` in graded-lex order.
    pub fn from_derivatives(n: usize, k: u32, derivs: &[f64]) -> Self {
        let space = IndexSpace::get(n, k);
        assert_eq!(derivs.len(), space.len(), "derivative count mismatch");
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(p, d)| d / space.factorial_of(p))
            .collect();
        TaylorValue { space, coeffs }
    }

    /// A series depending only on coordinate `axis`: `Σ_r c_r h_axis^r`.
    pub fn from_axis_series(n: usize, k: u32, axis: usize, series: &[f64]) -> Self {
        let mut v = Self::zero(n, k);
        for (r, &c) in series.iter().enumerate().take(k as usize + 1) {
            let mut e = vec![0u32; n];
            e[axis] = r as u32;
            let pos = v.space.position(&MultiIndex::new(e).unwrap()).unwrap();
            v.coeffs[pos] = c;
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn order(&self) -> u32 {
        self.space.order()
    }

    pub fn space(&self) -> &Arc<IndexSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<f64> {
        self.space.position(alpha).map(|p| self.coeffs[p])
    }

    /// `∂^α f(x₀) = α! · coefficient`.
    pub fn extract_derivative(&self, alpha: &MultiIndex) -> Result<f64, TaylorError> {
        if alpha.dim() != self.dim() {
            return Err(TaylorError::IndexDimension(alpha.clone()));
        }
        if alpha.order() > self.order() {
            return Err(TaylorError::OrderTooHigh {
                requested: alpha.order(),
                order: self.order(),
            });
        }
        let pos = self.space.position(alpha).unwrap();
        Ok(self.coeffs[pos] * self.space.factorial_of(pos))
    }

    /// All derivatives `∂^α f(x₀)` in graded-lex order.
    pub fn derivatives(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| c * self.space.factorial_of(p))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    fn same_space(&self, other: &TaylorValue) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
            || (self.dim() == other.dim() && self.order() == other.order())
    }

    fn assert_same_space(&self, other: &TaylorValue) {
        assert!(
            self.same_space(other),
            "Taylor operands differ in dimension or order: ({}, {}) vs ({}, {})",
            self.dim(),
            self.order(),
            other.dim(),
            other.order()
        );
    }

    pub fn scale(&self, s: f64) -> TaylorValue {
        TaylorValue {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &TaylorValue, s: f64) {
        self.assert_same_space(other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn try_mul(&self, other: &TaylorValue) -> Result<TaylorValue, TaylorError> {
        if !self.same_space(other) {
            return Err(TaylorError::PointDimension {
                got: other.dim(),
                expected: self.dim(),
            });
        }
        Ok(self * other)
    }

    /// Truncated series quotient; the divisor needs a nonzero constant term.
    pub fn div(&self, other: &TaylorValue) -> Result<TaylorValue, TaylorError> {
        self.assert_same_space(other);
        let b0 = other.coeffs[0];
        if b0 == 0.0 {
            return Err(TaylorError::ZeroDivisor);
        }
        let mut q = vec![0.0; self.coeffs.len()];
        for t in 0..q.len() {
            let mut acc = self.coeffs[t];
            for &(i, j) in self.space.pairs_for(t) {
                if j != 0 {
                    acc -= q[i as usize] * other.coeffs[j as usize];
                }
            }
            q[t] = acc / b0;
        }
        Ok(TaylorValue {
            space: Arc::clone(&self.space),
            coeffs: q,
        })
    }

    pub fn recip(&self) -> Result<TaylorValue, TaylorError> {
        self.constant_like(1.0).div(self)
    }

    /// `Σ_r c_r (self − self₀)^r`, i.e. the composition of a univariate series
    /// (expanded at this value's constant term) with `self`.
    pub fn compose_univariate(&self, series: &[f64]) -> TaylorValue {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let k = (self.order() as usize).min(series.len().saturating_sub(1));
        let mut acc = self.constant_like(series[k]);
        for r in (0..k).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += series[r];
        }
        acc
    }

    pub fn elementary(&self, f: Elementary) -> Result<TaylorValue, TaylorError> {
        let series = f.coefficients(self.coeffs[0], self.order())?;
        Ok(self.compose_univariate(&series))
    }

    pub fn exp(&self) -> TaylorValue {
        self.elementary(Elementary::Exp).unwrap()
    }

    pub fn sin(&self) -> TaylorValue {
        self.elementary(Elementary::Sin).unwrap()
    }

    pub fn cos(&self) -> TaylorValue {
        self.elementary(Elementary::Cos).unwrap()
    }

    pub fn ln(&self) -> Result<TaylorValue, TaylorError> {
        self.elementary(Elementary::Ln)
    }

    pub fn sqrt(&self) -> Result<TaylorValue, TaylorError> {
        self.elementary(Elementary::Sqrt)
    }

    /// Non-negative integer power by repeated squaring.
    pub fn powi(&self, e: u32) -> TaylorValue {
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Re-truncates to a lower order `l ≤ k`.
    pub fn truncate(&self, l: u32) -> TaylorValue {
        assert!(l <= self.order());
        let space = IndexSpace::get(self.dim(), l);
        let coeffs = self.coeffs[..space.len()].to_vec();
        TaylorValue { space, coeffs }
    }

    /// Composes the series `self` (in `t` variables, expanded at `inner(0)`)
    /// with `inner`, a vector of `t` series in `s` variables.
    pub fn compose(&self, inner: &[TaylorValue]) -> TaylorValue {
        assert_eq!(inner.len(), self.dim(), "inner map has wrong arity");
        assert!(!inner.is_empty());
        let k = self.order().min(inner[0].order());
        let deltas: Vec<TaylorValue> = inner
            .iter()
            .map(|v| {
                let mut d = v.clone();
                d.coeffs[0] = 0.0;
                d
            })
            .collect();
        // powers[i][r] = delta_i^r
        let powers: Vec<Vec<TaylorValue>> = deltas
            .iter()
            .map(|d| {
                let mut p = vec![d.constant_like(1.0)];
                for r in 1..=k {
                    let next = &p[r as usize - 1] * d;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = inner[0].constant_like(0.0);
        for (pos, beta) in self.space.indices().iter().enumerate() {
            if beta.order() > k || self.coeffs[pos] == 0.0 {
                continue;
            }
            let mut term = inner[0].constant_like(self.coeffs[pos]);
            for (i, &b) in beta.exponents().iter().enumerate() {
                if b > 0 {
                    term = &term * &powers[i][b as usize];
                }
            }
            out += &term;
        }
        out
    }
}

impl fmt::Debug for TaylorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaylorValue")
            .field("n", &self.dim())
            .field("k", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for TaylorValue {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.coeffs == other.coeffs
    }
}

impl<'a> Add<&'a TaylorValue> for &'a TaylorValue {
    type Output = TaylorValue;
    fn add(self, rhs: &TaylorValue) -> TaylorValue {
        self.assert_same_space(rhs);
        TaylorValue {
            space: Arc::clone(&self.space),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a TaylorValue> for &'a TaylorValue {
    type Output = TaylorValue;
    fn sub(self, rhs: &TaylorValue) -> TaylorValue {
        self.assert_same_space(rhs);
        TaylorValue {
            space: Arc::clone(&self.space),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Mul<&'a TaylorValue> for &'a TaylorValue {
    type Output = TaylorValue;
    fn mul(self, rhs: &TaylorValue) -> TaylorValue {
        self.assert_same_space(rhs);
        let mut out = vec![0.0; self.coeffs.len()];
        for (t, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(i, j) in self.space.pairs_for(t) {
                acc += self.coeffs[i as usize] * rhs.coeffs[j as usize];
            }
            *slot = acc;
        }
        TaylorValue {
            space: Arc::clone(&self.space),
            coeffs: out,
        }
    }
}

impl Neg for &TaylorValue {
    type Output = TaylorValue;
    fn neg(self) -> TaylorValue {
        self.scale(-1.0)
    }
}

impl AddAssign<&TaylorValue> for TaylorValue {
    fn add_assign(&mut self, rhs: &TaylorValue) {
        self.add_scaled(rhs, 1.0);
    }
}
