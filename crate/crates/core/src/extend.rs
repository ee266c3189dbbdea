//! The Whitney extension operator on `ℝⁿ` for jets on finite sets.
//!
//! Off the set, `F(x) = Σ_C φ_C(x) · T^k_{x_C} f(x)` over the cubes whose
//! enlarged region contains `x`. On the set, `F` and its derivatives are the
//! stored jet values.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::decomp::{ClosedSet, DecompError, Decomposition, WhitneyCube};
use crate::jets::{Jet, JetError};
use crate::multiindex::{IndexSpace, MultiIndex};
use crate::pou::partition_at;
use crate::taylor::TaylorValue;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtendError {
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("query point has dimension {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("requested order {requested} exceeds jet order {order}")]
    OrderTooHigh { requested: u32, order: u32 },
    #[error("invalid degree schedule: {0}")]
    BadSchedule(String),
    #[error("no degree schedule configured")]
    NoSchedule,
    #[error("cube at level {level} needs degree {degree} but the jet has order {order}")]
    ScheduleExhausted { level: u32, degree: u32, order: u32 },
}

/// Partial derivatives `∂^α F(x)` for all `|α| ≤ order`, graded-lex.
#[derive(Debug, Clone)]
pub struct Derivatives {
    space: Arc<IndexSpace>,
    values: Vec<Vec<f64>>,
}

impl PartialEq for Derivatives {
    fn eq(&self, other: &Self) -> bool {
        self.space.dim() == other.space.dim()
            && self.space.order() == other.space.order()
            && self.values == other.values
    }
}

impl Derivatives {
    /// Reads raw derivatives out of one Taylor series per output component.
    pub fn from_series(series: &[TaylorValue]) -> Derivatives {
        let space = Arc::clone(series[0].space());
        let values = (0..space.len())
            .map(|pos| {
                let f = space.factorial_of(pos);
                series.iter().map(|a| a.coefficients()[pos] * f).collect()
            })
            .collect();
        Derivatives { space, values }
    }

    pub fn space(&self) -> &Arc<IndexSpace> {
        &self.space
    }

    pub fn order(&self) -> u32 {
        self.space.order()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&[f64]> {
        self.space.position(alpha).map(|p| self.values[p].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &[f64])> {
        self.space
            .indices()
            .iter()
            .zip(self.values.iter().map(Vec::as_slice))
    }
}

/// Checks `δ_i > 0`, strictly decreasing, with `δ_{i+1} < δ_i / 2`.
pub fn validate_schedule(deltas: &[f64]) -> Result<(), ExtendError> {
    if deltas.is_empty() {
        return Err(ExtendError::BadSchedule("empty".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(ExtendError::BadSchedule(format!("radius {d} is not positive")));
    }
    for w in deltas.windows(2) {
        if !(w[1] < w[0] / 2.0) {
            return Err(ExtendError::BadSchedule(format!(
                "{} is not below half of {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Extension {
    jet: Jet,
    decomp: Decomposition,
    schedule: Option<Vec<f64>>,
}

impl Extension {
    pub fn new(jet: Jet, max_level: u32) -> Extension {
        let set = ClosedSet::points(jet.points().to_vec()).expect("jet points form a valid set");
        Extension {
            jet,
            decomp: Decomposition::new(set, max_level),
            schedule: None,
        }
    }

    pub fn with_schedule(mut self, deltas: Vec<f64>) -> Result<Extension, ExtendError> {
        validate_schedule(&deltas)?;
        self.schedule = Some(deltas);
        Ok(self)
    }

    pub fn jet(&self) -> &Jet {
        &self.jet
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomp
    }

    pub fn schedule(&self) -> Option<&[f64]> {
        self.schedule.as_deref()
    }

    fn check_point(&self, x: &[f64]) -> Result<(), ExtendError> {
        if x.len() != self.jet.dim() {
            return Err(ExtendError::Dimension {
                got: x.len(),
                expected: self.jet.dim(),
            });
        }
        Ok(())
    }

    /// Index of `x_C` among the jet's points.
    pub fn anchor_index(&self, c: &WhitneyCube) -> usize {
        let a = self.decomp.anchor(c);
        self.jet.find_point(&a).expect("anchor is a jet point")
    }

    /// `F(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, ExtendError> {
        self.check_point(x)?;
        if let Some(p) = self.jet.find_point(x) {
            return Ok(self.jet.value(p, 0).to_vec());
        }
        let k = self.jet.order();
        let parts = partition_at(&self.decomp, x, 0)?;
        let base_y = self.anchor_index(&parts[0].0);
        let base = self.jet.taylor_poly_at(base_y, k, x)?;
        let mut out = base.clone();
        for (c, phi) in &parts {
            let y = self.anchor_index(c);
            if y == base_y {
                continue;
            }
            let t = self.jet.taylor_poly_at(y, k, x)?;
            let w = phi.value();
            for ((o, v), b) in out.iter_mut().zip(t).zip(&base) {
                *o += w * (v - b);
            }
        }
        Ok(out)
    }

    /// `T^k_y f` for the point at index `y`, expanded at `x` to order `upto`,
    /// one series per output component.
    fn anchor_series(&self, y: usize, x: &[f64], upto: u32) -> Vec<TaylorValue> {
        let n = self.jet.dim();
        let yp = self.jet.point(y);
        let seeds: Vec<TaylorValue> = (0..n)
            .map(|i| {
                let mut s = TaylorValue::seed_variable(x, i, upto).unwrap();
                s.coefficients_mut()[0] = x[i] - yp[i];
                s
            })
            .collect();
        let k = self.jet.order() as usize;
        let powers: Vec<Vec<TaylorValue>> = seeds
            .iter()
            .map(|s| {
                let mut p = vec![s.constant_like(1.0)];
                for r in 1..=k {
                    let next = &p[r - 1] * s;
                    p.push(next);
                }
                p
            })
            .collect();
        let space = self.jet.space();
        let mut out = vec![TaylorValue::zero(n, upto); self.jet.outdim()];
        for (pos, alpha) in space.indices().iter().enumerate() {
            let mut mono = TaylorValue::constant(n, upto, 1.0 / space.factorial_of(pos));
            for (i, &a) in alpha.exponents().iter().enumerate() {
                if a > 0 {
                    mono = &mono * &powers[i][a as usize];
                }
            }
            for (o, &v) in out.iter_mut().zip(self.jet.value(y, pos)) {
                if v != 0.0 {
                    o.add_scaled(&mono, v);
                }
            }
        }
        out
    }

    /// All `∂^α F(x)` with `|α| ≤ upto`.
    pub fn eval_derivs(&self, x: &[f64], upto: u32) -> Result<Derivatives, ExtendError> {
        self.check_point(x)?;
        let k = self.jet.order();
        if upto > k {
            return Err(ExtendError::OrderTooHigh { requested: upto, order: k });
        }
        let n = self.jet.dim();
        let space = IndexSpace::get(n, upto);
        if let Some(p) = self.jet.find_point(x) {
            let values = (0..space.len())
                .map(|pos| self.jet.value(p, pos).to_vec())
                .collect();
            return Ok(Derivatives { space, values });
        }
        // F = T_base + Σ φ_C (T_C − T_base): cubes sharing the base anchor
        // drop out, so large derivatives of φ_C never multiply a full polynomial
        let parts = partition_at(&self.decomp, x, upto)?;
        let base_y = self.anchor_index(&parts[0].0);
        let base = self.anchor_series(base_y, x, upto);
        let mut acc = base.clone();
        let mut cache: HashMap<usize, Vec<TaylorValue>> = HashMap::new();
        for (c, phi) in &parts {
            let y = self.anchor_index(c);
            if y == base_y {
                continue;
            }
            let diff = cache.entry(y).or_insert_with(|| {
                self.anchor_series(y, x, upto)
                    .into_iter()
                    .zip(&base)
                    .map(|(s, b)| &s - b)
                    .collect()
            });
            for (a, s) in acc.iter_mut().zip(diff.iter()) {
                *a += &(phi * s);
            }
        }
        Ok(Derivatives::from_series(&acc))
    }

    /// Per-cube degree `g_C = max{i ≥ 1 : d(y_C, A) < δ_i} ∪ {0}`.
    pub fn cube_degree(&self, c: &WhitneyCube) -> Result<u32, ExtendError> {
        let deltas = self.schedule.as_ref().ok_or(ExtendError::NoSchedule)?;
        let d = self.decomp.set().distance_to_set(&c.center());
        Ok(deltas.iter().take_while(|&&delta| d < delta).count() as u32)
    }

    /// `Σ φ_C(x) · T^{g_C}_{x_C} f(x)` with degrees from the schedule.
    pub fn eval_adaptive(&self, x: &[f64]) -> Result<Vec<f64>, ExtendError> {
        self.check_point(x)?;
        if self.schedule.is_none() {
            return Err(ExtendError::NoSchedule);
        }
        if let Some(p) = self.jet.find_point(x) {
            return Ok(self.jet.value(p, 0).to_vec());
        }
        let k = self.jet.order();
        let mut out = vec![0.0; self.jet.outdim()];
        for (c, phi) in partition_at(&self.decomp, x, 0)? {
            let g = self.cube_degree(&c)?;
            if g > k {
                return Err(ExtendError::ScheduleExhausted {
                    level: c.level,
                    degree: g,
                    order: k,
                });
            }
            let t = self.jet.taylor_poly_at(self.anchor_index(&c), g, x)?;
            let w = phi.value();
            for (o, v) in out.iter_mut().zip(t) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Parallel `eval` over many points; results keep the input order.
    pub fn eval_batch(&self, xs: &[Vec<f64>]) -> Vec<Result<Vec<f64>, ExtendError>> {
        xs.par_iter().map(|x| self.eval(x)).collect()
    }

    /// Parallel `eval_derivs` over many points; results keep the input order.
    pub fn eval_derivs_batch(&self, xs: &[Vec<f64>], upto: u32) -> Vec<Result<Derivatives, ExtendError>> {
        xs.par_iter().map(|x| self.eval_derivs(x, upto)).collect()
    }
}

/// `‖Φ(a f + b g)(x) − a Φ(f)(x) − b Φ(g)(x)‖_max`.
pub fn linearity_probe(
    f: &Jet,
    g: &Jet,
    a: f64,
    b: f64,
    x: &[f64],
    max_level: u32,
) -> Result<f64, ExtendError> {
    let combo = f.linear_combination(a, g, b)?;
    let fx = Extension::new(f.clone(), max_level).eval(x)?;
    let gx = Extension::new(g.clone(), max_level).eval(x)?;
    let cx = Extension::new(combo, max_level).eval(x)?;
    Ok(cx
        .iter()
        .zip(fx.iter().zip(&gx))
        .map(|(c, (u, v))| (c - a * u - b * v).abs())
        .fold(0.0, f64::max))
}
