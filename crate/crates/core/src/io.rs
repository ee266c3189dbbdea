//! JSON documents for jets, closed sets and atlases.
//!
//! Jet values are keyed by multi-index strings `"[a,b,…]"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{AtlasError, AtlasJet, Chart, Codomain, FiniteAtlas, PartitionEntry};
use crate::decomp::{AaBox, ClosedSet, DecompError};
use crate::expr::{Expr, ExprError, VectorExpr};
use crate::jets::{Jet, JetError, JetPoint};
use crate::multiindex::{IndexSpace, MultiIndex, MultiIndexError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error(transparent)]
    MultiIndex(#[from] MultiIndexError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub id: String,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InduceSpec {
    pub expr: Vec<String>,
    pub points: Vec<PointSpec>,
}

/// Either explicit values per point, or an expression to induce them from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outdim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<PointSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub induce: Option<InduceSpec>,
}

fn ids_and_coords(points: &[PointSpec]) -> Vec<(String, Vec<f64>)> {
    points.iter().map(|p| (p.id.clone(), p.x.clone())).collect()
}

/// Order implied by a value map holding every index up to some order.
fn infer_order(n: usize, values: &BTreeMap<String, Vec<f64>>) -> Result<u32, IoError> {
    let mut k = 0;
    for key in values.keys() {
        k = k.max(MultiIndex::parse(key)?.order());
    }
    if IndexSpace::get(n, k).len() != values.len() {
        return Err(IoError::Invalid(format!(
            "values must list every multi-index up to order {k}"
        )));
    }
    Ok(k)
}

fn point_values(
    p: &PointSpec,
    space: &IndexSpace,
    outdim: usize,
) -> Result<Vec<Vec<f64>>, IoError> {
    let values = p
        .values
        .as_ref()
        .ok_or_else(|| IoError::Invalid(format!("point {:?} has no values", p.id)))?;
    let mut out = vec![Vec::new(); space.len()];
    for (key, v) in values {
        let alpha = MultiIndex::parse(key)?;
        let pos = space.position(&alpha).ok_or_else(|| {
            IoError::Invalid(format!("index {key} of point {:?} is out of range", p.id))
        })?;
        if v.len() != outdim {
            return Err(IoError::Invalid(format!(
                "index {key} of point {:?} has {} components, expected {outdim}",
                p.id,
                v.len()
            )));
        }
        out[pos] = v.clone();
    }
    if let Some(pos) = out.iter().position(Vec::is_empty) {
        return Err(IoError::Invalid(format!(
            "point {:?} lacks index {}",
            p.id,
            space.index(pos).key()
        )));
    }
    Ok(out)
}

/// Builds jets from explicit point records. Missing dimensions and order are
/// inferred from the first point.
pub fn jet_from_points(
    points: &[PointSpec],
    dim: Option<usize>,
    order: Option<u32>,
    outdim: Option<usize>,
) -> Result<Jet, IoError> {
    let first = points.first().ok_or(JetError::Empty)?;
    let n = dim.unwrap_or(first.x.len());
    let first_vals = first
        .values
        .as_ref()
        .ok_or_else(|| IoError::Invalid(format!("point {:?} has no values", first.id)))?;
    let k = match order {
        Some(k) => k,
        None => infer_order(n, first_vals)?,
    };
    let m = match outdim {
        Some(m) => m,
        None => first_vals
            .values()
            .next()
            .map(Vec::len)
            .ok_or_else(|| IoError::Invalid("empty value map".into()))?,
    };
    let space = IndexSpace::get(n, k);
    let recs = points
        .iter()
        .map(|p| {
            Ok(JetPoint {
                id: p.id.clone(),
                x: p.x.clone(),
                values: point_values(p, &space, m)?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(Jet::new(n, k, m, recs)?)
}

impl JetSpecFile {
    pub fn parse(text: &str) -> Result<JetSpecFile, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    /// The jet described by the document; `order` overrides the file's order
    /// for induced jets.
    pub fn to_jet(&self, order: Option<u32>) -> Result<Jet, IoError> {
        match (&self.points, &self.induce) {
            (Some(points), None) => jet_from_points(points, self.dim, self.order, self.outdim),
            (None, Some(ind)) => {
                let n = match self.dim {
                    Some(n) => n,
                    None => ind
                        .points
                        .first()
                        .map(|p| p.x.len())
                        .ok_or(JetError::Empty)?,
                };
                let k = order.or(self.order).ok_or_else(|| {
                    IoError::Invalid("induced jets need an order (\"order\" or --k)".into())
                })?;
                let f = VectorExpr::parse(&ind.expr, n)?;
                if let Some(m) = self.outdim {
                    if m != f.output_dim() {
                        return Err(IoError::Invalid("outdim disagrees with expression count".into()));
                    }
                }
                Ok(Jet::from_expr(&f, &ids_and_coords(&ind.points), k)?)
            }
            _ => Err(IoError::Invalid(
                "exactly one of \"points\" and \"induce\" must be present".into(),
            )),
        }
    }

    pub fn from_jet(jet: &Jet) -> JetSpecFile {
        JetSpecFile {
            dim: Some(jet.dim()),
            order: Some(jet.order()),
            outdim: Some(jet.outdim()),
            points: Some(jet_point_specs(jet)),
            induce: None,
        }
    }
}

pub fn jet_point_specs(jet: &Jet) -> Vec<PointSpec> {
    let space = jet.space();
    (0..jet.len())
        .map(|p| PointSpec {
            id: jet.ids()[p].clone(),
            x: jet.point(p).to_vec(),
            values: Some(
                (0..space.len())
                    .map(|pos| (space.index(pos).key(), jet.value(p, pos).to_vec()))
                    .collect(),
            ),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// `{"points": [[…], …]}` or `{"boxes": [{"lo": […], "hi": […]}, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpecFile {
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub boxes: Option<Vec<BoxSpec>>,
}

impl SetSpecFile {
    pub fn parse(text: &str) -> Result<SetSpecFile, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_set(&self) -> Result<ClosedSet, IoError> {
        match (&self.points, &self.boxes) {
            (Some(p), None) => Ok(ClosedSet::points(p.clone())?),
            (None, Some(b)) => {
                let boxes = b
                    .iter()
                    .map(|b| AaBox::new(b.lo.clone(), b.hi.clone()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ClosedSet::boxes(boxes)?)
            }
            _ => Err(IoError::Invalid(
                "exactly one of \"points\" and \"boxes\" must be present".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub id: String,
    pub codomain: Codomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: String,
    pub to: String,
    pub map: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartJetSpec {
    pub chart: String,
    pub points: Vec<PointSpec>,
}

/// A global function in one chart's coordinates, induced on every chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasInduceSpec {
    pub chart: String,
    pub expr: Vec<String>,
    pub order: u32,
    pub points: Vec<PointSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PouSpec {
    pub chart: String,
    pub h: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasFile {
    pub dim: usize,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jets: Option<Vec<ChartJetSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub induce: Option<AtlasInduceSpec>,
    #[serde(default)]
    pub pou: Vec<PouSpec>,
}

impl AtlasFile {
    pub fn parse(text: &str) -> Result<AtlasFile, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_atlas(&self) -> Result<FiniteAtlas, IoError> {
        let charts = self
            .charts
            .iter()
            .map(|c| Chart {
                id: c.id.clone(),
                codomain: c.codomain.clone(),
            })
            .collect();
        let transitions = self
            .transitions
            .iter()
            .map(|t| Ok((t.from.clone(), t.to.clone(), VectorExpr::parse(&t.map, self.dim)?)))
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(FiniteAtlas::new(self.dim, charts, transitions)?)
    }

    pub fn to_atlas_jet(&self, atlas: &FiniteAtlas) -> Result<AtlasJet, IoError> {
        match (&self.jets, &self.induce) {
            (Some(jets), None) => {
                let list = jets
                    .iter()
                    .map(|cj| Ok((cj.chart.clone(), jet_from_points(&cj.points, Some(self.dim), None, None)?)))
                    .collect::<Result<Vec<_>, IoError>>()?;
                Ok(AtlasJet::new(atlas, list)?)
            }
            (None, Some(ind)) => {
                let f = VectorExpr::parse(&ind.expr, self.dim)?;
                Ok(AtlasJet::from_global_function(
                    atlas,
                    &f,
                    &ind.chart,
                    &ids_and_coords(&ind.points),
                    ind.order,
                )?)
            }
            _ => Err(IoError::Invalid(
                "exactly one of \"jets\" and \"induce\" must be present".into(),
            )),
        }
    }

    pub fn partition(&self) -> Result<Vec<PartitionEntry>, IoError> {
        self.pou
            .iter()
            .map(|p| {
                if p.h.len() != 1 {
                    return Err(IoError::Invalid(format!(
                        "partition entry for chart {:?} must have exactly one expression",
                        p.chart
                    )));
                }
                Ok(PartitionEntry {
                    chart: p.chart.clone(),
                    h: Expr::parse(&p.h[0], self.dim)?,
                })
            })
            .collect()
    }
}
