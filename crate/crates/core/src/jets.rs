//! Whitney k-jets on finite point sets.
//!
//! A [`Jet`] assigns to every point of a finite set `A ⊂ ℝⁿ` and every
//! multi-index `|α| ≤ k` a value `f_α(x) ∈ ℝᵐ`. Values are stored point-major,
//! then in graded-lex index order, then by output component.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{ExprError, VectorExpr};
use crate::multiindex::{IndexSpace, MultiIndex};

/// Default per-coordinate agreement tolerance for gluing.
pub const GLUE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jet has no points")]
    Empty,
    #[error("dimension, order or output dimension is invalid: {0}")]
    Shape(String),
    #[error("points {0:?} and {1:?} have identical coordinates")]
    DuplicatePoint(String, String),
    #[error("point id {0:?} is used twice")]
    DuplicateId(String),
    #[error("unknown point id {0:?}")]
    UnknownPoint(String),
    #[error("order {requested} exceeds jet order {order}")]
    OrderTooHigh { requested: u32, order: u32 },
    #[error("non-finite value at point {0:?}")]
    NonFinite(String),
    #[error("jets disagree at point {id:?} by {deviation:e}")]
    Disagreement { id: String, deviation: f64 },
    #[error("point {0:?} is not covered by any piece")]
    CoverageGap(String),
    #[error("jets are incompatible: {0}")]
    Incompatible(String),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("seminorm coordinate {0} out of range")]
    BadSeminorm(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A continuous seminorm on `ℝᵐ`: one coordinate's absolute value, or the max.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seminorm {
    Coord(usize),
    Max,
}

impl Seminorm {
    pub fn apply(self, v: &[f64]) -> f64 {
        match self {
            Seminorm::Coord(i) => v[i].abs(),
            Seminorm::Max => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

/// Input record for building a jet.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint {
    pub id: String,
    pub x: Vec<f64>,
    /// One `m`-vector per multi-index, graded-lex order.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Jet {
    dim: usize,
    order: u32,
    outdim: usize,
    space: Arc<IndexSpace>,
    ids: Vec<String>,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    lookup: HashMap<String, usize>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.order == other.order
            && self.outdim == other.outdim
            && self.ids == other.ids
            && self.points == other.points
            && self.values == other.values
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl Jet {
    pub fn new(dim: usize, order: u32, outdim: usize, points: Vec<JetPoint>) -> Result<Jet, JetError> {
        if dim == 0 || outdim == 0 {
            return Err(JetError::Shape(format!("dim={dim}, outdim={outdim}")));
        }
        if points.is_empty() {
            return Err(JetError::Empty);
        }
        let space = IndexSpace::get(dim, order);
        let mut ids = Vec::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len());
        let mut values = Vec::with_capacity(points.len() * space.len() * outdim);
        for p in points {
            if p.x.len() != dim {
                return Err(JetError::Shape(format!(
                    "point {:?} has {} coordinates, expected {dim}",
                    p.id,
                    p.x.len()
                )));
            }
            if p.values.len() != space.len() {
                return Err(JetError::Shape(format!(
                    "point {:?} lists {} multi-indices, expected {}",
                    p.id,
                    p.values.len(),
                    space.len()
                )));
            }
            if p.x.iter().any(|c| !c.is_finite()) {
                return Err(JetError::NonFinite(p.id));
            }
            for v in &p.values {
                if v.len() != outdim {
                    return Err(JetError::Shape(format!(
                        "point {:?} has a value of length {}, expected {outdim}",
                        p.id,
                        v.len()
                    )));
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(JetError::NonFinite(p.id.clone()));
                }
                values.extend_from_slice(v);
            }
            ids.push(p.id);
            coords.push(p.x);
        }
        Self::from_parts(dim, order, outdim, ids, coords, values)
    }

    fn from_parts(
        dim: usize,
        order: u32,
        outdim: usize,
        ids: Vec<String>,
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
    ) -> Result<Jet, JetError> {
        if ids.is_empty() {
            return Err(JetError::Empty);
        }
        let mut lookup = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if lookup.insert(id.clone(), i).is_some() {
                return Err(JetError::DuplicateId(id.clone()));
            }
        }
        let mut sorted: Vec<usize> = (0..points.len()).collect();
        sorted.sort_by(|&a, &b| {
            points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in sorted.windows(2) {
            if points[w[0]] == points[w[1]] {
                return Err(JetError::DuplicatePoint(ids[w[0]].clone(), ids[w[1]].clone()));
            }
        }
        Ok(Jet {
            dim,
            order,
            outdim,
            space: IndexSpace::get(dim, order),
            ids,
            points,
            values,
            lookup,
        })
    }

    /// Induces `f_α(p) = ∂^α f(p)` from a smooth expression.
    pub fn from_expr(f: &VectorExpr, points: &[(String, Vec<f64>)], k: u32) -> Result<Jet, JetError> {
        let dim = f.input_dim();
        let outdim = f.output_dim();
        let mut recs = Vec::with_capacity(points.len());
        for (id, x) in points {
            let series = f.eval_taylor(x, k)?;
            let derivs: Vec<Vec<f64>> = series.iter().map(|s| s.derivatives()).collect();
            let nidx = derivs[0].len();
            let values = (0..nidx)
                .map(|a| derivs.iter().map(|d| d[a]).collect())
                .collect();
            recs.push(JetPoint {
                id: id.clone(),
                x: x.clone(),
                values,
            });
        }
        Jet::new(dim, k, outdim, recs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn outdim(&self) -> usize {
        self.outdim
    }

    pub fn space(&self) -> &Arc<IndexSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, p: usize) -> &[f64] {
        &self.points[p]
    }

    pub fn index_of(&self, id: &str) -> Result<usize, JetError> {
        self.lookup
            .get(id)
            .copied()
            .ok_or_else(|| JetError::UnknownPoint(id.to_string()))
    }

    /// Index of the point with exactly these coordinates.
    pub fn find_point(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.as_slice() == x)
    }

    /// `f_α(p)` by graded-lex position.
    pub fn value(&self, p: usize, pos: usize) -> &[f64] {
        let start = (p * self.space.len() + pos) * self.outdim;
        &self.values[start..start + self.outdim]
    }

    pub fn value_of(&self, id: &str, alpha: &MultiIndex) -> Result<&[f64], JetError> {
        let p = self.index_of(id)?;
        let pos = self.space.position(alpha).ok_or(JetError::OrderTooHigh {
            requested: alpha.order(),
            order: self.order,
        })?;
        Ok(self.value(p, pos))
    }

    /// All values at point `p`, graded-lex then component.
    pub fn point_values(&self, p: usize) -> &[f64] {
        let w = self.space.len() * self.outdim;
        &self.values[p * w..(p + 1) * w]
    }

    fn check_order(&self, l: u32) -> Result<(), JetError> {
        if l > self.order {
            return Err(JetError::OrderTooHigh {
                requested: l,
                order: self.order,
            });
        }
        Ok(())
    }

    /// `Σ_{|β| ≤ l} (x−y)^β/β! · f_{α+β}(y)`, i.e. `T^l_y ∂^α f(x)`, for the
    /// point at index `y`.
    fn shifted_taylor(&self, alpha_pos: usize, l: u32, y: usize, x: &[f64]) -> Vec<f64> {
        let alpha = self.space.index(alpha_pos);
        let yp = &self.points[y];
        let diff: Vec<f64> = x.iter().zip(yp).map(|(a, b)| a - b).collect();
        let sub = IndexSpace::get(self.dim, l);
        let mut out = vec![0.0; self.outdim];
        for (bpos, beta) in sub.indices().iter().enumerate() {
            let target = self
                .space
                .position(&alpha.add(beta).unwrap())
                .expect("shifted index within jet order");
            let w = beta.monomial(&diff) / sub.factorial_of(bpos);
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.value(y, target)) {
                *o += w * v;
            }
        }
        out
    }

    /// `R^l_y ∂^α f(x) = f_α(x) − T^l_y ∂^α f(x)` for points `x`, `y` of the set.
    fn shifted_remainder(&self, alpha_pos: usize, l: u32, y: usize, x: usize) -> Vec<f64> {
        let t = self.shifted_taylor(alpha_pos, l, y, &self.points[x]);
        self.value(x, alpha_pos)
            .iter()
            .zip(t)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Taylor polynomial `T^l_y f(x)` anchored at point `y`.
    pub fn taylor_poly(&self, y: &str, l: u32, x: &[f64]) -> Result<Vec<f64>, JetError> {
        self.check_order(l)?;
        let y = self.index_of(y)?;
        self.taylor_poly_at(y, l, x)
    }

    pub fn taylor_poly_at(&self, y: usize, l: u32, x: &[f64]) -> Result<Vec<f64>, JetError> {
        self.check_order(l)?;
        if x.len() != self.dim {
            return Err(JetError::Shape(format!("query point has dimension {}", x.len())));
        }
        Ok(self.shifted_taylor(0, l, y, x))
    }

    /// Taylor remainder `R^l_y f(x) = f_0(x) − T^l_y f(x)`.
    pub fn remainder(&self, y: &str, l: u32, x: &str) -> Result<Vec<f64>, JetError> {
        self.check_order(l)?;
        let y = self.index_of(y)?;
        let x = self.index_of(x)?;
        Ok(self.shifted_remainder(0, l, y, x))
    }

    /// `∂^α f = (f_{α+β})_{|β| ≤ k−|α|}`.
    pub fn shift(&self, alpha: &MultiIndex) -> Result<Jet, JetError> {
        if alpha.dim() != self.dim {
            return Err(JetError::Shape(format!("multi-index {alpha} has wrong dimension")));
        }
        self.check_order(alpha.order())?;
        let l = self.order - alpha.order();
        let sub = IndexSpace::get(self.dim, l);
        let mut values = Vec::with_capacity(self.len() * sub.len() * self.outdim);
        for p in 0..self.len() {
            for beta in sub.indices() {
                let pos = self.space.position(&alpha.add(beta).unwrap()).unwrap();
                values.extend_from_slice(self.value(p, pos));
            }
        }
        Self::from_parts(self.dim, l, self.outdim, self.ids.clone(), self.points.clone(), values)
    }

    /// `pr_l f = (f_α)_{|α| ≤ l}`.
    pub fn project(&self, l: u32) -> Result<Jet, JetError> {
        self.check_order(l)?;
        let keep = self.space.prefix_len(l) * self.outdim;
        let full = self.space.len() * self.outdim;
        let mut values = Vec::with_capacity(self.len() * keep);
        for p in 0..self.len() {
            values.extend_from_slice(&self.values[p * full..p * full + keep]);
        }
        Self::from_parts(self.dim, l, self.outdim, self.ids.clone(), self.points.clone(), values)
    }

    /// `f|_V` for the listed ids, in the order given.
    pub fn restrict<S: AsRef<str>>(&self, ids: &[S]) -> Result<Jet, JetError> {
        let idx = ids
            .iter()
            .map(|id| self.index_of(id.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        self.restrict_indices(&idx)
    }

    pub fn restrict_indices(&self, idx: &[usize]) -> Result<Jet, JetError> {
        let mut values = Vec::with_capacity(idx.len() * self.space.len() * self.outdim);
        for &p in idx {
            values.extend_from_slice(self.point_values(p));
        }
        Self::from_parts(
            self.dim,
            self.order,
            self.outdim,
            idx.iter().map(|&p| self.ids[p].clone()).collect(),
            idx.iter().map(|&p| self.points[p].clone()).collect(),
            values,
        )
    }

    /// `a·self + b·other` on the same point set.
    pub fn linear_combination(&self, a: f64, other: &Jet, b: f64) -> Result<Jet, JetError> {
        if self.dim != other.dim
            || self.order != other.order
            || self.outdim != other.outdim
            || self.points != other.points
        {
            return Err(JetError::Incompatible(
                "linear combination needs identical point sets and shapes".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::from_parts(self.dim, self.order, self.outdim, self.ids.clone(), self.points.clone(), values)
    }

    /// Replaces all values (same layout).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Jet, JetError> {
        if values.len() != self.values.len() {
            return Err(JetError::Shape("value count mismatch".into()));
        }
        Self::from_parts(self.dim, self.order, self.outdim, self.ids.clone(), self.points.clone(), values)
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    fn subset(&self, k: &[&str]) -> Result<Vec<usize>, JetError> {
        k.iter().map(|id| self.index_of(id)).collect()
    }

    /// `‖f‖'_{l,q,K} = max_{|α| ≤ l} max_{x ∈ K} q(f_α(x))`.
    pub fn seminorm_prime(&self, l: u32, q: Seminorm, k: &[&str]) -> Result<f64, JetError> {
        let idx = self.subset(k)?;
        self.seminorm_prime_at(l, q, &idx)
    }

    /// `‖f‖''_{l,q,K}`: the largest remainder quotient over distinct pairs of `K`.
    pub fn seminorm_dprime(&self, l: u32, q: Seminorm, k: &[&str]) -> Result<f64, JetError> {
        let idx = self.subset(k)?;
        self.seminorm_dprime_at(l, q, &idx)
    }

    /// `‖f‖_{l,q,K} = ‖f‖' + ‖f‖''`.
    pub fn seminorm(&self, l: u32, q: Seminorm, k: &[&str]) -> Result<f64, JetError> {
        let idx = self.subset(k)?;
        self.seminorm_at(l, q, &idx)
    }

    fn check_seminorm(&self, q: Seminorm) -> Result<(), JetError> {
        match q {
            Seminorm::Coord(i) if i >= self.outdim => Err(JetError::BadSeminorm(i)),
            _ => Ok(()),
        }
    }

    pub fn seminorm_prime_at(&self, l: u32, q: Seminorm, k: &[usize]) -> Result<f64, JetError> {
        self.check_order(l)?;
        self.check_seminorm(q)?;
        let npos = self.space.prefix_len(l);
        let mut best = 0.0f64;
        for &p in k {
            for pos in 0..npos {
                best = best.max(q.apply(self.value(p, pos)));
            }
        }
        Ok(best)
    }

    pub fn seminorm_dprime_at(&self, l: u32, q: Seminorm, k: &[usize]) -> Result<f64, JetError> {
        self.check_order(l)?;
        self.check_seminorm(q)?;
        let npos = self.space.prefix_len(l);
        let mut best = 0.0f64;
        for &x in k {
            for &y in k {
                if x == y {
                    continue;
                }
                let dist = euclid(&self.points[x], &self.points[y]);
                for pos in 0..npos {
                    let rest = l - self.space.order_of(pos);
                    let r = self.shifted_remainder(pos, rest, y, x);
                    best = best.max(q.apply(&r) / dist.powi(rest as i32));
                }
            }
        }
        Ok(best)
    }

    pub fn seminorm_at(&self, l: u32, q: Seminorm, k: &[usize]) -> Result<f64, JetError> {
        Ok(self.seminorm_prime_at(l, q, k)? + self.seminorm_dprime_at(l, q, k)?)
    }

    /// Seminorm over the whole point set.
    pub fn seminorm_all(&self, l: u32, q: Seminorm) -> Result<f64, JetError> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.seminorm_at(l, q, &all)
    }

    /// Diameter of the subset `K`.
    pub fn diameter(&self, k: &[usize]) -> f64 {
        let mut d = 0.0f64;
        for (i, &a) in k.iter().enumerate() {
            for &b in &k[i + 1..] {
                d = d.max(euclid(&self.points[a], &self.points[b]));
            }
        }
        d
    }

    /// The Whitney-condition quotient
    /// `q_max(R^{l−|α|}_y ∂^α f(x)) / ‖x−y‖^{l−|α|}` maximized over pairs with
    /// `0 < ‖x−y‖ < δ` and `|α| ≤ l`; zero when no pair is that close.
    pub fn whitney_modulus(&self, l: u32, delta: f64) -> Result<f64, JetError> {
        self.check_order(l)?;
        if !(delta > 0.0) {
            return Err(JetError::BadRadius(delta));
        }
        let npos = self.space.prefix_len(l);
        let mut best = 0.0f64;
        for x in 0..self.len() {
            for y in 0..self.len() {
                if x == y {
                    continue;
                }
                let dist = euclid(&self.points[x], &self.points[y]);
                if dist >= delta {
                    continue;
                }
                for pos in 0..npos {
                    let rest = l - self.space.order_of(pos);
                    let r = self.shifted_remainder(pos, rest, y, x);
                    best = best.max(Seminorm::Max.apply(&r) / dist.powi(rest as i32));
                }
            }
        }
        Ok(best)
    }

    /// Reassembles a jet from pieces `(jet, ids taken from it)`. Shared ids must
    /// carry identical coordinates and values agreeing within `tol` per entry.
    pub fn glue(pieces: &[(Jet, Vec<String>)], tol: f64) -> Result<Jet, JetError> {
        let first = &pieces.first().ok_or(JetError::Empty)?.0;
        let (dim, order, outdim) = (first.dim, first.order, first.outdim);
        let mut order_seen: Vec<String> = Vec::new();
        let mut merged: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (jet, ids) in pieces {
            if jet.dim != dim || jet.order != order || jet.outdim != outdim {
                return Err(JetError::Incompatible("pieces differ in shape".into()));
            }
            for id in ids {
                let p = jet
                    .index_of(id)
                    .map_err(|_| JetError::CoverageGap(id.clone()))?;
                let x = jet.points[p].clone();
                let vals = jet.point_values(p).to_vec();
                match merged.get(id) {
                    None => {
                        order_seen.push(id.clone());
                        merged.insert(id.clone(), (x, vals));
                    }
                    Some((x0, v0)) => {
                        if *x0 != x {
                            return Err(JetError::Incompatible(format!(
                                "point {id:?} has different coordinates in two pieces"
                            )));
                        }
                        let dev = v0
                            .iter()
                            .zip(&vals)
                            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                        if dev > tol {
                            return Err(JetError::Disagreement {
                                id: id.clone(),
                                deviation: dev,
                            });
                        }
                    }
                }
            }
        }
        let mut ids = Vec::with_capacity(order_seen.len());
        let mut points = Vec::with_capacity(order_seen.len());
        let mut values = Vec::new();
        for id in order_seen {
            let (x, v) = merged.remove(&id).unwrap();
            ids.push(id);
            points.push(x);
            values.extend(v);
        }
        Self::from_parts(dim, order, outdim, ids, points, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn pts(xs: &[f64]) -> Vec<(String, Vec<f64>)> {
        xs.iter().enumerate().map(|(i, &x)| (format!("p{i}"), vec![x])).collect()
    }

    fn jet1(src: &str, xs: &[f64], k: u32) -> Jet {
        Jet::from_expr(&VectorExpr::parse(&[src], 1).unwrap(), &pts(xs), k).unwrap()
    }

    #[test]
    fn induced_jet_examples() {
        let j = jet1("x0^2", &[0.0, 1.0], 2);
        assert_eq!(j.point_values(0), &[0.0, 0.0, 2.0]);
        assert_eq!(j.point_values(1), &[1.0, 2.0, 2.0]);
        let c = jet1("3.5", &[0.0, 1.0], 2);
        assert_eq!(c.point_values(1), &[3.5, 0.0, 0.0]);
        let e = jet1("exp(x0)", &[0.0], 3);
        for v in e.point_values(0) {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn construction_errors() {
        let rec = |id: &str, x: f64| JetPoint {
            id: id.into(),
            x: vec![x],
            values: vec![vec![0.0]],
        };
        assert_eq!(Jet::new(1, 0, 1, vec![]), Err(JetError::Empty));
        assert!(matches!(
            Jet::new(1, 0, 1, vec![rec("a", 1.0), rec("b", 1.0)]),
            Err(JetError::DuplicatePoint(..))
        ));
        assert!(matches!(
            Jet::new(1, 0, 1, vec![rec("a", 1.0), rec("a", 2.0)]),
            Err(JetError::DuplicateId(_))
        ));
        assert!(matches!(Jet::new(1, 1, 1, vec![rec("a", 1.0)]), Err(JetError::Shape(_))));
        assert!(matches!(
            Jet::new(1, 0, 1, vec![rec("a", f64::NAN)]),
            Err(JetError::NonFinite(_))
        ));
    }

    #[test]
    fn taylor_poly_examples() {
        let j = jet1("x0^2", &[0.0, 1.0], 2);
        assert_eq!(j.taylor_poly("p0", 2, &[5.0]).unwrap(), vec![25.0]);
        assert_eq!(j.taylor_poly("p1", 0, &[-40.0]).unwrap(), vec![1.0]);
        assert_eq!(j.taylor_poly("p1", 1, &[3.0]).unwrap(), vec![5.0]);
        assert!(matches!(j.taylor_poly("p1", 3, &[3.0]), Err(JetError::OrderTooHigh { .. })));
        assert!(matches!(j.taylor_poly("zz", 1, &[3.0]), Err(JetError::UnknownPoint(_))));
    }

    #[test]
    fn remainder_examples() {
        let j = jet1("x0^2 - 3*x0", &[0.0, 1.0, 2.5], 2);
        for y in ["p0", "p1", "p2"] {
            for x in ["p0", "p1", "p2"] {
                assert!(j.remainder(y, 2, x).unwrap()[0].abs() < 1e-12);
            }
            assert_eq!(j.remainder(y, 1, y).unwrap(), vec![0.0]);
        }
        let e = jet1("exp(x0)", &[0.0, 0.1], 1);
        assert_relative_eq!(
            e.remainder("p0", 1, "p1").unwrap()[0],
            0.1f64.exp() - 1.1,
            epsilon = 1e-15
        );
        assert_relative_eq!(e.remainder("p0", 1, "p1").unwrap()[0], 0.0051709, epsilon = 1e-7);
    }

    #[test]
    fn shift_examples() {
        let j = jet1("x0^2", &[0.0, 1.0], 2);
        assert_eq!(j.shift(&mi(&[0])).unwrap(), j);
        let d = j.shift(&mi(&[1])).unwrap();
        assert_eq!(d.order(), 1);
        assert_eq!(d, jet1("2*x0", &[0.0, 1.0], 1));
        let top = j.shift(&mi(&[2])).unwrap();
        assert_eq!(top.order(), 0);
        assert_eq!(top.raw_values(), &[2.0, 2.0]);
        assert!(j.shift(&mi(&[3])).is_err());
    }

    #[test]
    fn project_restrict_examples() {
        let f = VectorExpr::parse(&["x0*x1", "sin(x0)"], 2).unwrap();
        let points: Vec<(String, Vec<f64>)> = vec![
            ("a".into(), vec![0.0, 1.0]),
            ("b".into(), vec![0.5, -1.0]),
            ("c".into(), vec![2.0, 0.25]),
        ];
        let j = Jet::from_expr(&f, &points, 3).unwrap();
        assert_eq!(j.project(3).unwrap(), j);
        assert_eq!(j.restrict(&["a", "b", "c"]).unwrap(), j);
        let pr = j.project(1).unwrap().restrict(&["c", "a"]).unwrap();
        let rp = j.restrict(&["c", "a"]).unwrap().project(1).unwrap();
        assert_eq!(pr, rp);
        assert_eq!(pr.ids(), &["c".to_string(), "a".to_string()]);
        assert!(matches!(j.restrict(&["q"]), Err(JetError::UnknownPoint(_))));
        assert_eq!(
            j.value_of("b", &mi(&[1, 1])).unwrap(),
            &[1.0, 0.0]
        );
    }

    #[test]
    fn seminorm_examples() {
        let j = jet1("x0^2", &[0.0, 1.0], 2);
        let k = ["p0", "p1"];
        assert_eq!(j.seminorm_prime(2, Seminorm::Max, &k).unwrap(), 2.0);
        assert_eq!(j.seminorm_dprime(2, Seminorm::Max, &k).unwrap(), 0.0);
        assert_eq!(j.seminorm(2, Seminorm::Coord(0), &k).unwrap(), 2.0);
        let z = jet1("0", &[0.0, 1.0, 3.0], 2);
        assert_eq!(z.seminorm_all(2, Seminorm::Max).unwrap(), 0.0);
        let e = jet1("exp(x0)", &[0.0, 1.0], 2);
        assert_eq!(e.seminorm_dprime(2, Seminorm::Max, &["p1"]).unwrap(), 0.0);
        assert!(matches!(
            e.seminorm(2, Seminorm::Coord(1), &["p1"]),
            Err(JetError::BadSeminorm(1))
        ));
    }

    #[test]
    fn modulus_examples() {
        let j = jet1("x0^3 - x0", &[0.0, 0.3, 0.7, 1.0], 3);
        assert!(j.whitney_modulus(3, 10.0).unwrap() < 1e-10);
        let grid: Vec<f64> = (0..=100).map(|i| f64::from(i) / 100.0).collect();
        let e = jet1("exp(x0)", &grid, 2);
        let near = e.whitney_modulus(2, 0.05).unwrap();
        let far = e.whitney_modulus(2, 0.5).unwrap();
        assert!(near < far, "{near} vs {far}");
        assert!(e.whitney_modulus(2, 0.005).unwrap() <= near);
        let single = jet1("exp(x0)", &[0.3], 2);
        assert_eq!(single.whitney_modulus(2, 1.0).unwrap(), 0.0);
        assert!(matches!(single.whitney_modulus(2, 0.0), Err(JetError::BadRadius(_))));
    }

    #[test]
    fn glue_examples() {
        let j = jet1("sin(x0)", &[0.0, 1.0, 2.0, 3.0], 1);
        let all: Vec<String> = j.ids().to_vec();
        assert_eq!(Jet::glue(&[(j.clone(), all.clone())], GLUE_TOL).unwrap(), j);

        let left = j.restrict(&["p0", "p1"]).unwrap();
        let right = j.restrict(&["p2", "p3"]).unwrap();
        let glued = Jet::glue(
            &[
                (left.clone(), left.ids().to_vec()),
                (right.clone(), right.ids().to_vec()),
            ],
            GLUE_TOL,
        )
        .unwrap();
        assert_eq!(glued, j);

        let a = j.restrict(&["p0", "p1", "p2"]).unwrap();
        let b = j.restrict(&["p2", "p3"]).unwrap();
        let ok = Jet::glue(
            &[(a.clone(), a.ids().to_vec()), (b.clone(), b.ids().to_vec())],
            GLUE_TOL,
        )
        .unwrap();
        assert_eq!(ok, j);

        let mut vals = b.raw_values().to_vec();
        vals[0] += 1e-6;
        let b_bad = b.with_values(vals).unwrap();
        assert!(matches!(
            Jet::glue(&[(a.clone(), a.ids().to_vec()), (b_bad, b.ids().to_vec())], GLUE_TOL),
            Err(JetError::Disagreement { .. })
        ));
        assert!(matches!(
            Jet::glue(&[(a, vec!["p3".to_string()])], GLUE_TOL),
            Err(JetError::CoverageGap(_))
        ));
    }
}
