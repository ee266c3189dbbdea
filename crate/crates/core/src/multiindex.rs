//! Multi-indices `α ∈ ℕ₀ⁿ` and the graded-lex index spaces `{α : |α| ≤ k}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MultiIndexError {
    #[error("multi-index dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
    #[error("cannot parse multi-index from {0:?}")]
    Parse(String),
}

/// An exponent vector `α = (α₁, …, αₙ)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self, MultiIndexError> {
        if exponents.is_empty() {
            return Err(MultiIndexError::ZeroDimension);
        }
        Ok(MultiIndex(exponents))
    }

    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "multi-index dimension must be at least 1");
        MultiIndex(vec![0; n])
    }

    /// The unit index `eᵢ`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = Self::zero(n);
        e.0[i] = 1;
        e
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `|α| = α₁ + … + αₙ`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `α! = α₁!⋯αₙ!`, with overflow detection at 64 bits.
    pub fn factorial(&self) -> Result<u64, MultiIndexError> {
        let mut acc: u64 = 1;
        for &a in &self.0 {
            for f in 2..=u64::from(a) {
                acc = acc
                    .checked_mul(f)
                    .ok_or(MultiIndexError::Overflow("factorial"))?;
            }
        }
        Ok(acc)
    }

    /// `α!` as a float; never overflows for the orders used here.
    pub fn factorial_f64(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (2..=a).map(f64::from).product::<f64>())
            .product()
    }

    /// Entrywise product of binomial coefficients `C(αᵢ, βᵢ)`; zero unless `β ≤ α`.
    pub fn binom(&self, beta: &MultiIndex) -> Result<u64, MultiIndexError> {
        self.check_dim(beta)?;
        let mut acc: u64 = 1;
        for (&a, &b) in self.0.iter().zip(&beta.0) {
            if b > a {
                return Ok(0);
            }
            acc = acc
                .checked_mul(binomial(u64::from(a), u64::from(b))?)
                .ok_or(MultiIndexError::Overflow("binom"))?;
        }
        Ok(acc)
    }

    /// `x^α` with the convention `0⁰ = 1`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    /// Componentwise partial order `α ≤ β`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> Result<MultiIndex, MultiIndexError> {
        self.check_dim(other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// `α − β` when `β ≤ α`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Concatenation `(α, β) ∈ ℕ₀^{n+m}`.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    fn check_dim(&self, other: &MultiIndex) -> Result<(), MultiIndexError> {
        if self.dim() != other.dim() {
            return Err(MultiIndexError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// Parses `"[1,0,2]"` or `"(1,0,2)"`.
    pub fn parse(s: &str) -> Result<MultiIndex, MultiIndexError> {
        let t = s.trim();
        let inner = t
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .or_else(|| t.strip_prefix('(').and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| MultiIndexError::Parse(s.to_string()))?;
        let exps = inner
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| MultiIndexError::Parse(s.to_string()))?;
        MultiIndex::new(exps)
    }

    /// Canonical key form `"[a,b,…]"` used in files and CSV headers.
    pub fn key(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        format!("[{}]", parts.join(","))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn binomial(n: u64, k: u64) -> Result<u64, MultiIndexError> {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc
            .checked_mul(n - i)
            .ok_or(MultiIndexError::Overflow("binom"))?
            / (i + 1);
    }
    Ok(acc)
}

/// `C(n + k, n)`, the number of multi-indices of dimension `n` and order `≤ k`.
pub fn count_upto(n: usize, k: u32) -> usize {
    binomial((n as u64) + u64::from(k), n as u64).expect("index space too large") as usize
}

/// All `α ∈ ℕ₀ⁿ` with `|α| ≤ k` in graded-lex order: by `|α|`, then
/// lexicographically descending, so `(1,0)` precedes `(0,1)`.
pub fn enumerate_upto(n: usize, k: u32) -> Vec<MultiIndex> {
    assert!(n >= 1, "multi-index dimension must be at least 1");
    let mut out = Vec::with_capacity(count_upto(n, k));
    let mut buf = vec![0u32; n];
    for d in 0..=k {
        fill_degree(&mut buf, 0, d, &mut out);
    }
    out
}

fn fill_degree(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for a in (0..=remaining).rev() {
        buf[pos] = a;
        fill_degree(buf, pos + 1, remaining - a, out);
    }
}

/// The graded-lex index set `{α ∈ ℕ₀ⁿ : |α| ≤ k}` with position lookup and the
/// truncated-convolution pair table.
///
/// Instances are interned per `(n, k)`; obtain them through [`IndexSpace::get`].
pub struct IndexSpace {
    n: usize,
    k: u32,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    /// For every target position `t`, the pairs `(i, j)` with `αᵢ + αⱼ = α_t`,
    /// ordered by `i`.
    pairs: Vec<Vec<(u32, u32)>>,
    orders: Vec<u32>,
    factorials: Vec<f64>,
}

impl IndexSpace {
    pub fn get(n: usize, k: u32) -> Arc<IndexSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<IndexSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(s) = cache.lock().unwrap().get(&(n, k)) {
            return Arc::clone(s);
        }
        // built outside the lock; a concurrent duplicate build yields an identical table
        let space = Arc::new(IndexSpace::build(n, k));
        let mut guard = cache.lock().unwrap();
        Arc::clone(guard.entry((n, k)).or_insert(space))
    }

    fn build(n: usize, k: u32) -> IndexSpace {
        let indices = enumerate_upto(n, k);
        let lookup: HashMap<MultiIndex, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut pairs = vec![Vec::new(); indices.len()];
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.order() + b.order() > k {
                    continue;
                }
                let sum = a.add(b).unwrap();
                pairs[lookup[&sum]].push((i as u32, j as u32));
            }
        }
        let orders = indices.iter().map(MultiIndex::order).collect();
        let factorials = indices.iter().map(MultiIndex::factorial_f64).collect();
        IndexSpace {
            n,
            k,
            indices,
            lookup,
            pairs,
            orders,
            factorials,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, pos: usize) -> &MultiIndex {
        &self.indices[pos]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub fn pairs_for(&self, target: usize) -> &[(u32, u32)] {
        &self.pairs[target]
    }

    pub fn order_of(&self, pos: usize) -> u32 {
        self.orders[pos]
    }

    pub fn factorial_of(&self, pos: usize) -> f64 {
        self.factorials[pos]
    }

    /// Number of leading positions with `|α| ≤ l`.
    pub fn prefix_len(&self, l: u32) -> usize {
        count_upto(self.n, l.min(self.k))
    }
}

impl fmt::Debug for IndexSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndexSpace")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("len", &self.indices.len())
            .finish()
    }
}
