//! Finite atlases with expression transitions, jets on atlases, and the
//! manifold extension with a supplied partition of unity.
//!
//! Manifold points are only ever addressed as `(chart id, coordinates)`. The
//! transition stored under `(from, to)` maps `from`-coordinates to
//! `to`-coordinates, i.e. it is `ψ ∘ φ⁻¹` for `φ = from`, `ψ = to`.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomp::DEFAULT_MAX_LEVEL;
use crate::expr::{Expr, ExprError, VectorExpr};
use crate::extend::{Derivatives, ExtendError, Extension};
use crate::fdb::{jet_pullback_paired, match_point, FdbError, MATCH_TOL};
use crate::jets::{Jet, JetError, GLUE_TOL};
use crate::taylor::TaylorValue;

/// Slack for codomain box membership.
pub const CODOMAIN_SLACK: f64 = 1e-12;
/// Allowed deviation of `Σ h_i` from 1 at jet points.
pub const PARTITION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtlasError {
    #[error("unknown chart {0:?}")]
    UnknownChart(String),
    #[error("chart {0:?} is defined twice")]
    DuplicateChart(String),
    #[error("invalid transition {from:?} -> {to:?}: {reason}")]
    BadTransition { from: String, to: String, reason: String },
    #[error("charts {from:?} and {to:?} share points but no transition {from:?} -> {to:?} is given")]
    MissingTransition { from: String, to: String },
    #[error("charts {0:?} and {1:?} share no points")]
    NoOverlap(String, String),
    #[error("point {0:?} is not covered by any remaining chart")]
    CoverageGap(String),
    #[error("chart {0:?} carries no jet")]
    MissingJet(String),
    #[error("partition functions sum to 1 + {deviation:e} at point {id:?} of chart {chart:?}")]
    PartitionDeficit { chart: String, id: String, deviation: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Fdb(#[from] FdbError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Extend(#[from] ExtendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Codomain {
    All,
    Box(Vec<[f64; 2]>),
}

impl Codomain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Codomain::All => x.iter().all(|v| v.is_finite()),
            Codomain::Box(b) => {
                b.len() == x.len()
                    && b.iter().zip(x).all(|([lo, hi], &v)| {
                        let slack = CODOMAIN_SLACK * (1.0 + v.abs());
                        lo - slack <= v && v <= hi + slack
                    })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub id: String,
    pub codomain: Codomain,
}

#[derive(Debug, Clone)]
pub struct FiniteAtlas {
    dim: usize,
    charts: Vec<Chart>,
    transitions: BTreeMap<(String, String), VectorExpr>,
}

impl FiniteAtlas {
    pub fn new(
        dim: usize,
        charts: Vec<Chart>,
        transitions: Vec<(String, String, VectorExpr)>,
    ) -> Result<FiniteAtlas, AtlasError> {
        if dim == 0 {
            return Err(AtlasError::Dimension("atlas dimension is zero".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &charts {
            if !seen.insert(c.id.clone()) {
                return Err(AtlasError::DuplicateChart(c.id.clone()));
            }
            if let Codomain::Box(b) = &c.codomain {
                if b.len() != dim || b.iter().any(|[lo, hi]| !(lo <= hi)) {
                    return Err(AtlasError::Dimension(format!("codomain of chart {:?}", c.id)));
                }
            }
        }
        let mut map = BTreeMap::new();
        for (from, to, t) in transitions {
            for id in [&from, &to] {
                if !seen.contains(id) {
                    return Err(AtlasError::UnknownChart(id.clone()));
                }
            }
            if t.input_dim() != dim || t.output_dim() != dim {
                return Err(AtlasError::BadTransition {
                    from,
                    to,
                    reason: format!("map is ℝ^{} -> ℝ^{}", t.input_dim(), t.output_dim()),
                });
            }
            if map.insert((from.clone(), to.clone()), t).is_some() {
                return Err(AtlasError::BadTransition {
                    from,
                    to,
                    reason: "given twice".into(),
                });
            }
        }
        Ok(FiniteAtlas {
            dim,
            charts,
            transitions: map,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, id: &str) -> Result<&Chart, AtlasError> {
        self.charts
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| AtlasError::UnknownChart(id.to_string()))
    }

    /// The coordinate change `from → to`; the identity when `from == to`.
    pub fn transition(&self, from: &str, to: &str) -> Result<Option<VectorExpr>, AtlasError> {
        self.chart(from)?;
        self.chart(to)?;
        if from == to {
            return Ok(Some(VectorExpr::identity(self.dim)));
        }
        Ok(self
            .transitions
            .get(&(from.to_string(), to.to_string()))
            .cloned())
    }

    fn require_transition(&self, from: &str, to: &str) -> Result<VectorExpr, AtlasError> {
        self.transition(from, to)?
            .ok_or_else(|| AtlasError::MissingTransition {
                from: from.to_string(),
                to: to.to_string(),
            })
    }

    /// `to`-coordinates of the point with `from`-coordinates `x`, if a
    /// transition exists and the image lies in the codomain of `to`.
    pub fn map_point(&self, from: &str, to: &str, x: &[f64]) -> Result<Option<Vec<f64>>, AtlasError> {
        let Some(t) = self.transition(from, to)? else {
            return Ok(None);
        };
        let y = match t.eval_real(x) {
            Ok(y) => y,
            Err(ExprError::Domain(_)) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        Ok(self.chart(to)?.codomain.contains(&y).then_some(y))
    }

    /// `max |T_{to→from}(T_{from→to}(x)) − x|_∞` over the samples.
    pub fn inverse_residual(&self, from: &str, to: &str, samples: &[Vec<f64>]) -> Result<f64, AtlasError> {
        let fwd = self.require_transition(from, to)?;
        let back = self.require_transition(to, from)?;
        let mut worst = 0.0f64;
        for x in samples {
            let y = back.eval_real(&fwd.eval_real(x)?)?;
            for (a, b) in y.iter().zip(x) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

/// Per-chart jets of one order and output dimension; point ids name the
/// same manifold point across charts.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlasJet {
    jets: BTreeMap<String, Jet>,
}

impl AtlasJet {
    pub fn new(atlas: &FiniteAtlas, jets: Vec<(String, Jet)>) -> Result<AtlasJet, AtlasError> {
        let mut map = BTreeMap::new();
        let mut shape: Option<(u32, usize)> = None;
        for (chart, jet) in jets {
            atlas.chart(&chart)?;
            if jet.dim() != atlas.dim() {
                return Err(AtlasError::Dimension(format!("jet of chart {chart:?}")));
            }
            let s = (jet.order(), jet.outdim());
            if *shape.get_or_insert(s) != s {
                return Err(AtlasError::Dimension("charts carry jets of different shape".into()));
            }
            if map.insert(chart.clone(), jet).is_some() {
                return Err(AtlasError::DuplicateChart(chart));
            }
        }
        if map.is_empty() {
            return Err(AtlasError::Jet(JetError::Empty));
        }
        Ok(AtlasJet { jets: map })
    }

    /// The jet induced on every chart by `f`, given in `base` coordinates, at
    /// the points `(id, base coordinates)`. Charts without a transition to
    /// `base` or containing none of the points are left out.
    pub fn from_global_function(
        atlas: &FiniteAtlas,
        f: &VectorExpr,
        base: &str,
        points: &[(String, Vec<f64>)],
        k: u32,
    ) -> Result<AtlasJet, AtlasError> {
        let mut jets = Vec::new();
        for chart in atlas.charts() {
            let Some(back) = atlas.transition(&chart.id, base)? else {
                continue;
            };
            let mut local = Vec::new();
            for (id, x) in points {
                if let Some(y) = atlas.map_point(base, &chart.id, x)? {
                    local.push((id.clone(), y));
                }
            }
            if local.is_empty() {
                continue;
            }
            let fc = if chart.id == base { f.clone() } else { f.compose(&back) };
            jets.push((chart.id.clone(), Jet::from_expr(&fc, &local, k)?));
        }
        AtlasJet::new(atlas, jets)
    }

    pub fn charts(&self) -> impl Iterator<Item = &str> {
        self.jets.keys().map(String::as_str)
    }

    pub fn jet(&self, chart: &str) -> Option<&Jet> {
        self.jets.get(chart)
    }

    pub fn jets(&self) -> &BTreeMap<String, Jet> {
        &self.jets
    }

    pub fn order(&self) -> u32 {
        self.jets.values().next().unwrap().order()
    }

    pub fn outdim(&self) -> usize {
        self.jets.values().next().unwrap().outdim()
    }

    /// All point ids, sorted.
    pub fn point_ids(&self) -> BTreeSet<String> {
        self.jets.values().flat_map(|j| j.ids().iter().cloned()).collect()
    }

    /// Every chart's jet projected to order `l`.
    pub fn project_order(&self, l: u32) -> Result<AtlasJet, AtlasError> {
        let jets = self
            .jets
            .iter()
            .map(|(c, j)| Ok((c.clone(), j.project(l)?)))
            .collect::<Result<BTreeMap<_, _>, AtlasError>>()?;
        Ok(AtlasJet { jets })
    }
}

fn shared_ids(a: &Jet, b: &Jet) -> Vec<String> {
    a.ids().iter().filter(|id| b.index_of(id).is_ok()).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrespondenceReport {
    pub phi: String,
    pub psi: String,
    pub shared: usize,
    /// Largest deviation between `f_φ` and the pullback of `f_ψ`.
    pub max_residual: f64,
    /// Largest mismatch between mapped and stored coordinates of shared points.
    pub point_residual: f64,
    pub pass: bool,
}

/// Compares `f_φ` with `(ψ∘φ⁻¹)^* f_ψ` on the points both charts carry.
pub fn correspondence_check(
    aj: &AtlasJet,
    atlas: &FiniteAtlas,
    phi: &str,
    psi: &str,
    tol: f64,
) -> Result<CorrespondenceReport, AtlasError> {
    let fphi = aj.jet(phi).ok_or_else(|| AtlasError::MissingJet(phi.to_string()))?;
    let fpsi = aj.jet(psi).ok_or_else(|| AtlasError::MissingJet(psi.to_string()))?;
    let ids = shared_ids(fphi, fpsi);
    if ids.is_empty() {
        return Err(AtlasError::NoOverlap(phi.to_string(), psi.to_string()));
    }
    let t = atlas.require_transition(phi, psi)?;
    let mut pts = Vec::with_capacity(ids.len());
    let mut targets = Vec::with_capacity(ids.len());
    let mut point_residual = 0.0f64;
    for id in &ids {
        let x = fphi.point(fphi.index_of(id)?).to_vec();
        let q = fpsi.index_of(id)?;
        let y = t.eval_real(&x)?;
        for (a, b) in y.iter().zip(fpsi.point(q)) {
            point_residual = point_residual.max((a - b).abs());
        }
        pts.push((id.clone(), x));
        targets.push(q);
    }
    let pulled = jet_pullback_paired(&t, fpsi, &pts, &targets)?;
    let own = fphi.restrict(&ids)?;
    let max_residual = pulled
        .raw_values()
        .iter()
        .zip(own.raw_values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(CorrespondenceReport {
        phi: phi.to_string(),
        psi: psi.to_string(),
        shared: ids.len(),
        max_residual,
        point_residual,
        pass: max_residual <= tol && point_residual <= tol,
    })
}

/// Correspondence reports for every ordered pair of charts sharing points.
pub fn correspondence_all(
    aj: &AtlasJet,
    atlas: &FiniteAtlas,
    tol: f64,
) -> Result<Vec<CorrespondenceReport>, AtlasError> {
    let charts: Vec<&str> = aj.charts().collect();
    let pairs: Vec<(&str, &str)> = charts
        .iter()
        .flat_map(|&a| charts.iter().map(move |&b| (a, b)))
        .filter(|(a, b)| a != b && !shared_ids(aj.jet(a).unwrap(), aj.jet(b).unwrap()).is_empty())
        .collect();
    pairs
        .par_iter()
        .map(|(a, b)| correspondence_check(aj, atlas, a, b, tol))
        .collect()
}

/// The jet in chart `target` obtained by pulling every source chart's jet
/// back along `source ∘ target⁻¹` and gluing the results. Target points are
/// the images of source points that land in the target codomain; an id seen
/// from several sources takes its coordinates from the first.
pub fn transport(
    aj: &AtlasJet,
    atlas: &FiniteAtlas,
    sources: &[&str],
    target: &str,
    tol: f64,
) -> Result<Jet, AtlasError> {
    atlas.chart(target)?;
    let mut coords: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for &src in sources {
        let f = aj.jet(src).ok_or_else(|| AtlasError::MissingJet(src.to_string()))?;
        for (id, x) in f.ids().iter().zip(f.points()) {
            if coords.contains_key(id) {
                continue;
            }
            if let Some(y) = atlas.map_point(src, target, x)? {
                coords.insert(id.clone(), y);
                order.push(id.clone());
            }
        }
    }
    let mut pieces = Vec::new();
    for &src in sources {
        let f = aj.jet(src).unwrap();
        let mine: Vec<&String> = order.iter().filter(|id| f.index_of(id).is_ok()).collect();
        if mine.is_empty() {
            continue;
        }
        let t = atlas.require_transition(target, src)?;
        let pts: Vec<(String, Vec<f64>)> = mine.iter().map(|id| ((*id).clone(), coords[*id].clone())).collect();
        let targets = mine
            .iter()
            .map(|id| f.index_of(id))
            .collect::<Result<Vec<_>, _>>()?;
        let pulled = jet_pullback_paired(&t, f, &pts, &targets)?;
        let ids = pulled.ids().to_vec();
        pieces.push((pulled, ids));
    }
    if pieces.is_empty() {
        return Err(AtlasError::NoOverlap(sources.join(","), target.to_string()));
    }
    Ok(Jet::glue(&pieces, tol)?)
}

/// Drops every chart outside `keep`; all point ids must stay covered.
pub fn atlas_project(aj: &AtlasJet, keep: &[&str]) -> Result<AtlasJet, AtlasError> {
    let jets: BTreeMap<String, Jet> = aj
        .jets
        .iter()
        .filter(|(c, _)| keep.contains(&c.as_str()))
        .map(|(c, j)| (c.clone(), j.clone()))
        .collect();
    let covered: BTreeSet<String> = jets.values().flat_map(|j| j.ids().iter().cloned()).collect();
    if let Some(missing) = aj.point_ids().into_iter().find(|id| !covered.contains(id)) {
        return Err(AtlasError::CoverageGap(missing));
    }
    if jets.is_empty() {
        return Err(AtlasError::Jet(JetError::Empty));
    }
    Ok(AtlasJet { jets })
}

/// Recovers a dropped chart's jet from the remaining charts.
pub fn reconstruct(projected: &AtlasJet, atlas: &FiniteAtlas, chart: &str, tol: f64) -> Result<Jet, AtlasError> {
    let sources: Vec<&str> = projected
        .charts()
        .filter(|c| *c != chart && atlas.transition(c, chart).ok().flatten().is_some())
        .collect();
    transport(projected, atlas, &sources, chart, tol)
}

/// One entry `h_i` of a partition of unity, in its chart's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEntry {
    pub chart: String,
    pub h: Expr,
}

/// `F = Σ_i h_i · F_i`, where `F_i` extends chart `i`'s jet on `ℝⁿ`.
#[derive(Debug, Clone)]
pub struct ManifoldExtension {
    atlas: FiniteAtlas,
    aj: AtlasJet,
    pou: Vec<PartitionEntry>,
    extensions: BTreeMap<String, Extension>,
}

impl ManifoldExtension {
    pub fn new(
        atlas: FiniteAtlas,
        aj: AtlasJet,
        pou: Vec<PartitionEntry>,
        max_level: u32,
    ) -> Result<ManifoldExtension, AtlasError> {
        let mut extensions = BTreeMap::new();
        for e in &pou {
            atlas.chart(&e.chart)?;
            let jet = aj.jet(&e.chart).ok_or_else(|| AtlasError::MissingJet(e.chart.clone()))?;
            extensions
                .entry(e.chart.clone())
                .or_insert_with(|| Extension::new(jet.clone(), max_level));
        }
        let me = ManifoldExtension {
            atlas,
            aj,
            pou,
            extensions,
        };
        me.validate()?;
        Ok(me)
    }

    pub fn with_default_level(atlas: FiniteAtlas, aj: AtlasJet, pou: Vec<PartitionEntry>) -> Result<ManifoldExtension, AtlasError> {
        Self::new(atlas, aj, pou, DEFAULT_MAX_LEVEL)
    }

    pub fn atlas(&self) -> &FiniteAtlas {
        &self.atlas
    }

    pub fn atlas_jet(&self) -> &AtlasJet {
        &self.aj
    }

    /// Checks transitions between charts sharing points, and that the Taylor
    /// series of `Σ h_i` is `1` at every jet point to `PARTITION_TOL`.
    fn validate(&self) -> Result<(), AtlasError> {
        let k = self.aj.order();
        for (chart, jet) in self.aj.jets() {
            for e in &self.pou {
                let other = self.aj.jet(&e.chart).unwrap();
                if &e.chart != chart
                    && !shared_ids(jet, other).is_empty()
                    && self.atlas.transition(chart, &e.chart)?.is_none()
                {
                    return Err(AtlasError::MissingTransition {
                        from: chart.clone(),
                        to: e.chart.clone(),
                    });
                }
            }
            for (id, x) in jet.ids().iter().zip(jet.points()) {
                let total = self.partition_series(chart, x, k)?;
                let mut dev = (total.value() - 1.0).abs();
                for c in &total.coefficients()[1..] {
                    dev = dev.max(c.abs());
                }
                if dev > PARTITION_TOL {
                    return Err(AtlasError::PartitionDeficit {
                        chart: chart.clone(),
                        id: id.clone(),
                        deviation: dev,
                    });
                }
            }
        }
        Ok(())
    }

    /// `Σ h_i` in `chart` coordinates, expanded at `z`.
    pub fn partition_series(&self, chart: &str, z: &[f64], k: u32) -> Result<TaylorValue, AtlasError> {
        let seeds = TaylorValue::seed_point(z, k);
        let mut total = TaylorValue::zero(z.len(), k);
        for e in &self.pou {
            if let Some((_, local)) = self.local_series(chart, &e.chart, z, &seeds)? {
                total += &e.h.eval_series_at(&local)?;
            }
        }
        Ok(total)
    }

    /// Coordinates of `z` (given in `from`) in chart `to`, plus the
    /// coordinate series, when the point lies in that chart.
    fn local_series(
        &self,
        from: &str,
        to: &str,
        z: &[f64],
        seeds: &[TaylorValue],
    ) -> Result<Option<(Vec<f64>, Vec<TaylorValue>)>, AtlasError> {
        let Some(y) = self.atlas.map_point(from, to, z)? else {
            return Ok(None);
        };
        if from == to {
            return Ok(Some((y, seeds.to_vec())));
        }
        let t = self.atlas.transition(from, to)?.unwrap();
        Ok(Some((y, t.eval_series_at(seeds)?)))
    }

    /// All `∂^α (F ∘ chart⁻¹)(z)` for `|α| ≤ upto`.
    pub fn eval_derivs(&self, chart: &str, z: &[f64], upto: u32) -> Result<Derivatives, AtlasError> {
        self.atlas.chart(chart)?;
        if z.len() != self.atlas.dim() {
            return Err(AtlasError::Dimension(format!("query has dimension {}", z.len())));
        }
        let seeds = TaylorValue::seed_point(z, upto);
        let m = self.aj.outdim();
        let mut acc = vec![TaylorValue::zero(z.len(), upto); m];
        for e in &self.pou {
            let Some((y, local)) = self.local_series(chart, &e.chart, z, &seeds)? else {
                continue;
            };
            let h = e.h.eval_series_at(&local)?;
            if h.is_zero() {
                continue;
            }
            let ext = &self.extensions[&e.chart];
            // images of jet points are snapped onto the stored coordinates
            let at = match match_point(ext.jet(), &y, MATCH_TOL) {
                Some(p) => ext.jet().point(p).to_vec(),
                None => y,
            };
            let d = ext.eval_derivs(&at, upto)?;
            for (o, a) in acc.iter_mut().enumerate() {
                let raw: Vec<f64> = d.values().iter().map(|v| v[o]).collect();
                let fi = TaylorValue::from_derivatives(z.len(), upto, &raw);
                *a += &(&h * &fi.compose(&local));
            }
        }
        Ok(Derivatives::from_series(&acc))
    }

    /// `F` at the point with `chart`-coordinates `z`.
    pub fn eval(&self, chart: &str, z: &[f64]) -> Result<Vec<f64>, AtlasError> {
        Ok(self.eval_derivs(chart, z, 0)?.values()[0].clone())
    }
}

/// Default tolerance for gluing transported jets.
pub const TRANSPORT_TOL: f64 = GLUE_TOL;
