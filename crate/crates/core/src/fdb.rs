//! Faà di Bruno combinatorics for partial derivatives of compositions, and
//! jet pullback along smooth maps.
//!
//! For `α ∈ ℕ₀ˢ` with `|α| = k`, write `j_1 ≤ … ≤ j_k` for the coordinates
//! repeated according to `α`. A block `I ⊆ {1..k}` then names the derivative
//! `∂^{(I)}` with `(I)_r = |{l ∈ I : j_l = r}|`. The polynomial `p_{α,β}` sums,
//! over partitions into `|β|` blocks and component assignments with counts
//! `β`, the products `Π ∂^{(I_a)} g_{i_a}`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::expr::{ExprError, VectorExpr};
use crate::jets::{Jet, JetError, JetPoint};
use crate::multiindex::{IndexSpace, MultiIndex};
use crate::taylor::{TaylorError, TaylorValue};

pub const MAX_ORDER: u32 = 8;
/// Default image-matching tolerance for pullbacks, relative to `1 + |b|_∞`.
pub const MATCH_TOL: f64 = 1e-12;
const MAX_TERMS: u64 = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdbError {
    #[error("partition request out of range: k={k}, j={j}")]
    OutOfRange { k: u32, j: u32 },
    #[error("order {0} exceeds the supported maximum of 8")]
    OrderTooHigh(u32),
    #[error("table for order {order} into dimension {t} is too large")]
    TooLarge { order: u32, t: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("image of point {id:?} matches no point of the source jet")]
    Unmatched { id: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Taylor(#[from] TaylorError),
}

/// A partition of `{1..k}` into non-empty blocks, each sorted, blocks ordered
/// by their minimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetPartition {
    pub blocks: Vec<Vec<u32>>,
}

/// All partitions of `{1..k}` into exactly `j` blocks, in restricted-growth
/// string order.
pub fn set_partitions(k: u32, j: u32) -> Result<Vec<SetPartition>, FdbError> {
    if j < 1 || j > k || k > MAX_ORDER {
        return Err(FdbError::OutOfRange { k, j });
    }
    let k = k as usize;
    let j = j as usize;
    let mut out = Vec::new();
    let mut labels = vec![0usize; k];
    fn rec(pos: usize, used: usize, j: usize, labels: &mut [usize], out: &mut Vec<SetPartition>) {
        let k = labels.len();
        // not enough elements left to open the missing blocks
        if used + (k - pos) < j {
            return;
        }
        if pos == k {
            let mut blocks = vec![Vec::new(); j];
            for (e, &b) in labels.iter().enumerate() {
                blocks[b].push(e as u32 + 1);
            }
            out.push(SetPartition { blocks });
            return;
        }
        for b in 0..used.min(j) {
            labels[pos] = b;
            rec(pos + 1, used, j, labels, out);
        }
        if used < j {
            labels[pos] = used;
            rec(pos + 1, used + 1, j, labels, out);
        }
    }
    rec(0, 0, j, &mut labels, &mut out);
    Ok(out)
}

/// `S(k, j)` by the standard recurrence.
pub fn stirling2(k: u32, j: u32) -> u64 {
    let mut row = vec![1u64];
    for n in 1..=k as usize {
        let mut next = vec![0u64; n + 1];
        for m in 1..=n {
            let carry = if m < row.len() { m as u64 * row[m] } else { 0 };
            next[m] = carry + row[m - 1];
        }
        row = next;
    }
    row.get(j as usize).copied().unwrap_or(0)
}

/// One variable `∂^γ g_i` of a Faà di Bruno polynomial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub gamma: MultiIndex,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: u64,
    /// Sorted factors; repeated entries are powers.
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn eval<F: Fn(&MultiIndex, usize) -> f64>(&self, dg: &F) -> f64 {
        self.factors
            .iter()
            .fold(self.coeff as f64, |acc, f| acc * dg(&f.gamma, f.component))
    }
}

/// All `p_{α,β}` for one `α` and target dimension `t`, indexed like the
/// graded-lex order of `ℕ₀ᵗ` up to `|α|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdbTable {
    source_dim: usize,
    target_dim: usize,
    alpha: MultiIndex,
    betas: Vec<MultiIndex>,
    polys: Vec<Vec<Monomial>>,
}

type TableKey = (usize, Vec<u32>);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<FdbTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<FdbTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The (memoized) table of `p_{α,β}` for target dimension `t`.
pub fn build_table(alpha: &MultiIndex, t: usize) -> Result<Arc<FdbTable>, FdbError> {
    let key = (t, alpha.exponents().to_vec());
    if let Some(hit) = table_cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(hit));
    }
    let table = Arc::new(compute_table(alpha, t)?);
    let mut cache = table_cache().lock().unwrap();
    Ok(Arc::clone(cache.entry(key).or_insert(table)))
}

fn compute_table(alpha: &MultiIndex, t: usize) -> Result<FdbTable, FdbError> {
    if t == 0 {
        return Err(FdbError::Dimension("target dimension is zero".into()));
    }
    let k = alpha.order();
    if k > MAX_ORDER {
        return Err(FdbError::OrderTooHigh(k));
    }
    let work: u64 = (1..=k)
        .map(|j| stirling2(k, j).saturating_mul((t as u64).saturating_pow(j)))
        .fold(0u64, u64::saturating_add);
    if work > MAX_TERMS {
        return Err(FdbError::TooLarge { order: k, t });
    }
    let s = alpha.dim();
    let betas = IndexSpace::get(t, k).indices().to_vec();
    let mut merged: Vec<BTreeMap<Vec<Factor>, u64>> = vec![BTreeMap::new(); betas.len()];
    let space = IndexSpace::get(t, k);
    if k == 0 {
        merged[0].insert(Vec::new(), 1);
    }
    // coordinate of each of the k differentiation slots (0-based)
    let slots: Vec<usize> = alpha
        .exponents()
        .iter()
        .enumerate()
        .flat_map(|(r, &a)| std::iter::repeat_n(r, a as usize))
        .collect();
    for j in 1..=k {
        for part in set_partitions(k, j)? {
            let gammas: Vec<MultiIndex> = part
                .blocks
                .iter()
                .map(|block| {
                    let mut e = vec![0u32; s];
                    for &l in block {
                        e[slots[l as usize - 1]] += 1;
                    }
                    MultiIndex::new(e).unwrap()
                })
                .collect();
            let mut assign = vec![0usize; j as usize];
            loop {
                let mut beta = vec![0u32; t];
                for &i in &assign {
                    beta[i] += 1;
                }
                let pos = space.position(&MultiIndex::new(beta).unwrap()).unwrap();
                let mut factors: Vec<Factor> = gammas
                    .iter()
                    .zip(&assign)
                    .map(|(g, &i)| Factor {
                        gamma: g.clone(),
                        component: i,
                    })
                    .collect();
                factors.sort();
                *merged[pos].entry(factors).or_insert(0) += 1;
                let mut d = 0;
                loop {
                    if d == assign.len() {
                        break;
                    }
                    assign[d] += 1;
                    if assign[d] < t {
                        break;
                    }
                    assign[d] = 0;
                    d += 1;
                }
                if d == assign.len() {
                    break;
                }
            }
        }
    }
    let polys = merged
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|(factors, coeff)| Monomial { coeff, factors })
                .collect()
        })
        .collect();
    Ok(FdbTable {
        source_dim: s,
        target_dim: t,
        alpha: alpha.clone(),
        betas,
        polys,
    })
}

impl FdbTable {
    pub fn alpha(&self) -> &MultiIndex {
        &self.alpha
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn betas(&self) -> &[MultiIndex] {
        &self.betas
    }

    /// Monomials of `p_{α,β}`; empty means the zero polynomial.
    pub fn poly(&self, beta: &MultiIndex) -> Option<&[Monomial]> {
        self.betas
            .iter()
            .position(|b| b == beta)
            .map(|p| self.polys[p].as_slice())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &[Monomial])> {
        self.betas.iter().zip(self.polys.iter().map(Vec::as_slice))
    }

    /// `p_{α,β}` at the point where `∂^γ g_i = dg(γ, i)`, for every `β`.
    pub fn eval_all<F: Fn(&MultiIndex, usize) -> f64>(&self, dg: &F) -> Vec<f64> {
        self.polys
            .iter()
            .map(|p| p.iter().map(|m| m.eval(dg)).sum())
            .collect()
    }

    /// Total multiplicity `Σ_β Σ coeff`, which must equal `Σ_j S(k,j) tʲ`.
    pub fn total_multiplicity(&self) -> u64 {
        self.polys.iter().flatten().map(|m| m.coeff).sum()
    }
}

fn write_poly(f: &mut fmt::Formatter<'_>, monos: &[Monomial]) -> fmt::Result {
    if monos.is_empty() {
        return write!(f, "0");
    }
    for (n, m) in monos.iter().enumerate() {
        if n > 0 {
            write!(f, " + ")?;
        }
        write!(f, "{}", m.coeff)?;
        for factor in &m.factors {
            write!(f, " * g^{}_{}", factor.gamma, factor.component)?;
        }
    }
    Ok(())
}

impl fmt::Display for FdbTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (beta, monos) in self.entries() {
            write!(f, "p[{},{}] = ", self.alpha, beta)?;
            write_poly(f, monos)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Raw derivative `∂^γ` read from a Taylor-normalized series.
fn raw(series: &TaylorValue, gamma: &MultiIndex) -> f64 {
    let pos = series.space().position(gamma).expect("derivative within series order");
    series.coefficients()[pos] * gamma.factorial_f64()
}

/// `∂^α (f∘g)(x)` by the Faà di Bruno sum.
pub fn chain_derivative(
    f: &VectorExpr,
    g: &VectorExpr,
    alpha: &MultiIndex,
    x: &[f64],
) -> Result<Vec<f64>, FdbError> {
    if g.output_dim() != f.input_dim() || g.input_dim() != x.len() || alpha.dim() != x.len() {
        return Err(FdbError::Dimension(format!(
            "f: {}→{}, g: {}→{}, α in ℕ₀^{}, x in ℝ^{}",
            f.input_dim(),
            f.output_dim(),
            g.input_dim(),
            g.output_dim(),
            alpha.dim(),
            x.len()
        )));
    }
    let k = alpha.order();
    let table = build_table(alpha, g.output_dim())?;
    let gs = g.eval_taylor(x, k)?;
    let gx: Vec<f64> = gs.iter().map(TaylorValue::value).collect();
    let fs = f.eval_taylor(&gx, k)?;
    let p = table.eval_all(&|gamma, i| raw(&gs[i], gamma));
    Ok(fs
        .iter()
        .map(|fc| {
            table
                .betas()
                .iter()
                .zip(&p)
                .filter(|(_, &w)| w != 0.0)
                .map(|(beta, w)| w * raw(fc, beta))
                .sum()
        })
        .collect())
}

pub(crate) fn match_point(f: &Jet, b: &[f64], tol: f64) -> Option<usize> {
    let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut best: Option<(f64, usize)> = None;
    for (p, y) in f.points().iter().enumerate() {
        let d = y.iter().zip(b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        if d <= tol * scale && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, p));
        }
    }
    best.map(|(_, p)| p)
}

/// `(g|_A)^* f` with the default matching tolerance.
pub fn jet_pullback(g: &VectorExpr, f: &Jet, points: &[(String, Vec<f64>)]) -> Result<Jet, FdbError> {
    jet_pullback_tol(g, f, points, MATCH_TOL)
}

/// `(g|_A)^* f`: for each `a ∈ A`, `Σ_β p_{α,β}(∂g(a)) f_β(g(a))`. Each image
/// `g(a)` must lie within `tol · (1 + |g(a)|_∞)` of a point of `f`.
pub fn jet_pullback_tol(
    g: &VectorExpr,
    f: &Jet,
    points: &[(String, Vec<f64>)],
    tol: f64,
) -> Result<Jet, FdbError> {
    pullback_with(g, f, points, |id, b| {
        match_point(f, b, tol).ok_or_else(|| FdbError::Unmatched { id: id.to_string() })
    })
}

/// Pullback with the image of each point named explicitly: `targets[i]` is
/// the index in `f` of the image of `points[i]`.
pub fn jet_pullback_paired(
    g: &VectorExpr,
    f: &Jet,
    points: &[(String, Vec<f64>)],
    targets: &[usize],
) -> Result<Jet, FdbError> {
    if targets.len() != points.len() || targets.iter().any(|&t| t >= f.len()) {
        return Err(FdbError::Dimension("pairing does not match the point list".into()));
    }
    let mut next = 0usize;
    pullback_with(g, f, points, |_, _| {
        next += 1;
        Ok(targets[next - 1])
    })
}

fn pullback_with<M>(
    g: &VectorExpr,
    f: &Jet,
    points: &[(String, Vec<f64>)],
    mut resolve: M,
) -> Result<Jet, FdbError>
where
    M: FnMut(&str, &[f64]) -> Result<usize, FdbError>,
{
    if g.output_dim() != f.dim() {
        return Err(FdbError::Dimension(format!(
            "map lands in ℝ^{}, jet lives in ℝ^{}",
            g.output_dim(),
            f.dim()
        )));
    }
    let s = g.input_dim();
    let k = f.order();
    let space = IndexSpace::get(s, k);
    let tables = space
        .indices()
        .iter()
        .map(|a| build_table(a, f.dim()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(points.len());
    for (id, a) in points {
        if a.len() != s {
            return Err(FdbError::Dimension(format!("point {id:?} has dimension {}", a.len())));
        }
        let gs = g.eval_taylor(a, k)?;
        let b: Vec<f64> = gs.iter().map(TaylorValue::value).collect();
        let q = resolve(id, &b)?;
        let values = tables
            .iter()
            .map(|table| {
                let p = table.eval_all(&|gamma, i| raw(&gs[i], gamma));
                let mut v = vec![0.0; f.outdim()];
                for (bpos, w) in p.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    // table betas are a prefix of the jet's index space
                    for (o, fv) in v.iter_mut().zip(f.value(q, bpos)) {
                        *o += w * fv;
                    }
                }
                v
            })
            .collect();
        out.push(JetPoint {
            id: id.clone(),
            x: a.clone(),
            values,
        });
    }
    Ok(Jet::new(s, k, f.outdim(), out)?)
}

/// Product ids `"a:b"`.
pub fn product_id(a: &str, b: &str) -> String {
    format!("{a}:{b}")
}

/// `(π|_{A×B})^* f` for the projection `ℝᵐ × ℝⁿ⁻ᵐ → ℝᵐ`: values `f_β` at
/// multi-indices `(β, 0)`, zero elsewhere.
pub fn product_lift(f: &Jet, fibre: &[(String, Vec<f64>)]) -> Result<Jet, FdbError> {
    let extra = fibre
        .first()
        .map(|p| p.1.len())
        .ok_or_else(|| FdbError::Dimension("empty fibre set".into()))?;
    let m = f.dim();
    let n = m + extra;
    let k = f.order();
    let space = IndexSpace::get(n, k);
    let mut points = Vec::with_capacity(f.len() * fibre.len());
    for (p, id) in f.ids().iter().enumerate() {
        for (bid, b) in fibre {
            if b.len() != extra {
                return Err(FdbError::Dimension(format!("fibre point {bid:?}")));
            }
            let values = space
                .indices()
                .iter()
                .map(|alpha| {
                    let e = alpha.exponents();
                    if e[m..].iter().all(|&v| v == 0) {
                        let beta = MultiIndex::new(e[..m].to_vec()).unwrap();
                        let pos = f.space().position(&beta).unwrap();
                        f.value(p, pos).to_vec()
                    } else {
                        vec![0.0; f.outdim()]
                    }
                })
                .collect();
            let mut x = f.point(p).to_vec();
            x.extend_from_slice(b);
            points.push(JetPoint {
                id: product_id(id, bid),
                x,
                values,
            });
        }
    }
    Ok(Jet::new(n, k, f.outdim(), points)?)
}

/// `(j|_A)^* F` for the inclusion `x ↦ (x, 0)`: values `F_{(β,0)}` at the
/// points `a:zero_id`. `base` supplies the ids and coordinates of `A`.
pub fn product_restrict(
    jet: &Jet,
    base: &[(String, Vec<f64>)],
    zero_id: &str,
) -> Result<Jet, FdbError> {
    let m = base
        .first()
        .map(|p| p.1.len())
        .ok_or_else(|| FdbError::Dimension("empty base set".into()))?;
    if m > jet.dim() {
        return Err(FdbError::Dimension("base dimension exceeds product dimension".into()));
    }
    let k = jet.order();
    let sub = IndexSpace::get(m, k);
    let mut points = Vec::with_capacity(base.len());
    for (id, a) in base {
        let p = jet.index_of(&product_id(id, zero_id))?;
        let values = sub
            .indices()
            .iter()
            .map(|beta| {
                let mut e = beta.exponents().to_vec();
                e.resize(jet.dim(), 0);
                let pos = jet.space().position(&MultiIndex::new(e).unwrap()).unwrap();
                jet.value(p, pos).to_vec()
            })
            .collect();
        points.push(JetPoint {
            id: id.clone(),
            x: a.clone(),
            values,
        });
    }
    Ok(Jet::new(m, k, jet.outdim(), points)?)
}

/// The projection `ℝᵐ × ℝᵉ → ℝᵐ` as an expression map.
pub fn projection_map(m: usize, extra: usize) -> VectorExpr {
    let comps: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    VectorExpr::parse(&comps, m + extra).expect("projection parses")
}

/// The inclusion `x ↦ (x, 0)` of `ℝᵐ` into `ℝᵐ⁺ᵉ`.
pub fn inclusion_map(m: usize, extra: usize) -> VectorExpr {
    let mut comps: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    comps.extend(std::iter::repeat_n("0".to_string(), extra));
    VectorExpr::parse(&comps, m).expect("inclusion parses")
}
